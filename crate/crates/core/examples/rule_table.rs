//! Prints the leaf-pair rule table and classifies a few hand-made word sets.

use caption_xray::corpus::{nonstop_set, StopwordList};
use caption_xray::xray::{eval_view, lookup, Leaf};

fn main() {
    print!("     ");
    for v2 in 1..=6 {
        print!("{v2:<18}");
    }
    println!();
    for v1 in 0..6 {
        let row = Leaf::new(v1).unwrap();
        print!("{}    ", row.letter());
        for v2 in 0..6 {
            let p = lookup(row, Leaf::new(v2).unwrap());
            print!("{:<18}", format!("{}, {}", p.first, p.second));
        }
        println!();
    }

    let sw = StopwordList::english();
    let cases = [
        ("a dog runs on the beach", "dog | beach | sand", "a dog running along the beach"),
        ("a happy dog", "dog | beach", "a cat sleeping on a sofa"),
        ("sunset over water", "dog | beach", "a dog running along the beach"),
    ];
    println!();
    for (gen, dense, gt) in cases {
        let cap = dense.split('|').fold(nonstop_set("", &sw), |acc, d| acc.union(&nonstop_set(d, &sw)));
        let v = eval_view(&nonstop_set(gen, &sw), &cap, &nonstop_set(gt, &sw));
        println!("{gen:?} vs {gt:?} -> leaf {}", v.label());
        for step in &v.trace {
            println!("  node {} {}: {}", step.node, if step.passed { "yes" } else { "no" }, step.detail);
        }
    }
}
