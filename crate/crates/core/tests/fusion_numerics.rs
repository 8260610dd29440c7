//! Numeric properties of the two-branch decoder, beam search and training.

mod common;

use caption_xray::fusion::{
    attend, beam_search, decode_step, decode_step_detailed, encode_dense_captions, encode_image, encode_visual,
    gradient_check, greedy_decode, load_checkpoint, logsumexp, save_checkpoint, stylize_word, train, BeamConfig,
    Branch, DecoderState, FusionConfig, FusionModel, TrainConfig, TrainingExample, Vocab, BOS, EOS, PAD, UNK,
};
use caption_xray::Error;
use common::fusion::{random_input, random_sample, random_vector, rng, tiny_model};
use rand::Rng;

#[test]
fn attention_weights_sum_to_one() {
    let mut r = rng(7);
    for trial in 0..1000u64 {
        let config = FusionConfig {
            hidden_dim: r.gen_range(1..=8),
            attention_dim: r.gen_range(1..=8),
            init_scale: r.gen_range(0.1..3.0),
            seed: trial,
            ..FusionConfig::tiny()
        };
        let m = config.hidden_dim;
        let styles = (0..config.style_count).map(|s| format!("s{s}")).collect();
        let model = FusionModel::new(config, Vocab::new(common::fusion::TINY_WORDS), styles).unwrap();
        let n = r.gen_range(1..=12);
        let states: Vec<Vec<f64>> = (0..n).map(|_| random_vector(m, 5.0, &mut r)).collect();
        let h = random_vector(m, 5.0, &mut r);
        let branch = if trial % 2 == 0 { Branch::Caption } else { Branch::Visual };
        let (att, alpha) = attend(&model, branch, &h, &states).unwrap();
        assert_eq!(alpha.len(), n);
        assert!(alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
        assert!((alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-9, "trial {trial}");
        // The attended vector is the alpha-weighted sum of the states.
        for d in 0..m {
            let want: f64 = states.iter().zip(&alpha).map(|(s, a)| a * s[d]).sum();
            assert!((att[d] - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn log_probs_are_normalized_every_step() {
    for seed in 0..10 {
        let model = tiny_model(seed);
        let mut r = rng(100 + seed);
        let enc = encode_image(&model, &random_input(&model.config, &mut r, None)).unwrap();
        let mut state = DecoderState::initial(&model);
        let mut prev = BOS;
        for _ in 0..12 {
            let w = stylize_word(&model, prev, (seed % 3) as usize).unwrap();
            let (lp, next, b) = decode_step_detailed(&model, &state, &w, &enc);
            assert!(logsumexp(&lp).abs() <= 1e-6);
            assert!((b.alpha_cap.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            assert!((b.alpha_vis.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prev = r.gen_range(4..model.config.vocab_size);
            state = next;
        }
    }
}

fn output_log_probs(model: &FusionModel, h: &[f64]) -> Vec<f64> {
    let w = model.params.get(model.layout.out_w);
    let b = model.params.get(model.layout.out_b);
    let logits: Vec<f64> = (0..w.rows)
        .map(|v| b.data[v] + (0..w.cols).map(|j| w.data[v * w.cols + j] * h[j]).sum::<f64>())
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

#[test]
fn fused_state_is_the_sum_of_branch_states() {
    for seed in 0..5 {
        let model = tiny_model(seed);
        let mut r = rng(seed);
        let enc = encode_image(&model, &random_input(&model.config, &mut r, None)).unwrap();
        let mut state = DecoderState::initial(&model);
        for t in 0..6 {
            let w = stylize_word(&model, if t == 0 { BOS } else { 4 + t % 4 }, 1).unwrap();
            let (lp, next, b) = decode_step_detailed(&model, &state, &w, &enc);
            for i in 0..model.config.hidden_dim {
                assert_eq!(next.h_att[i], b.h_att_cap[i] + b.h_att_vis[i]);
                assert_eq!(next.h_lang[i], b.h_lang_cap[i] + b.h_lang_vis[i]);
            }
            for (a, e) in lp.iter().zip(output_log_probs(&model, &next.h_lang)) {
                assert!((a - e).abs() <= 1e-12);
            }
            state = next;
        }
    }
}

#[test]
fn zeroed_branch_contributes_exactly_nothing() {
    for (zeroed, kept) in [(Branch::Visual, Branch::Caption), (Branch::Caption, Branch::Visual)] {
        for seed in 0..5 {
            let mut model = tiny_model(seed);
            model.zero_branch(zeroed);
            let mut r = rng(seed + 50);
            let enc = encode_image(&model, &random_input(&model.config, &mut r, None)).unwrap();
            let mut state = DecoderState::initial(&model);
            for t in 0..6 {
                let w = stylize_word(&model, if t == 0 { BOS } else { 4 + t % 4 }, 2).unwrap();
                let (lp, next, b) = decode_step_detailed(&model, &state, &w, &enc);
                let (h_att_z, h_lang_z, h_att_k, h_lang_k) = match kept {
                    Branch::Caption => (&b.h_att_vis, &b.h_lang_vis, &b.h_att_cap, &b.h_lang_cap),
                    Branch::Visual => (&b.h_att_cap, &b.h_lang_cap, &b.h_att_vis, &b.h_lang_vis),
                };
                assert!(h_att_z.iter().chain(h_lang_z).all(|&x| x == 0.0), "{zeroed:?} step {t}");
                assert_eq!(&next.h_att, h_att_k);
                assert_eq!(&next.h_lang, h_lang_k);
                for (a, e) in lp.iter().zip(output_log_probs(&model, h_lang_k)) {
                    assert!((a - e).abs() <= 1e-12);
                }
                state = next;
            }
        }
    }
}

#[test]
fn gradient_check_on_random_tiny_models() {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let model = tiny_model(seed);
        let sample = random_sample(&model.config, &mut rng(1000 + seed));
        let report = gradient_check(&model, &sample).unwrap();
        assert_eq!(report.checked, model.params.scalar_count());
        worst = worst.max(report.max_relative_error);
    }
    assert!(worst <= 1e-4, "max relative error {worst:.3e}");
}

#[test]
fn one_word_state_per_dense_caption_word() {
    let model = tiny_model(3);
    let input = random_input(&model.config, &mut rng(3), Some(&[3, 2, 4, 1, 2]));
    let (v_cap, words) = encode_dense_captions(&model, &input.captions).unwrap();
    assert_eq!(words.len(), 12);
    assert_eq!(v_cap.len(), 5 * model.config.hidden_dim);
    assert!(words.iter().all(|w| w.len() == model.config.hidden_dim));
    let bad = vec![vec![4], vec![5], vec![6], vec![7]];
    assert!(encode_dense_captions(&model, &bad).is_err());
    let out_of_vocab = vec![vec![4], vec![5], vec![6], vec![7], vec![99]];
    assert!(encode_dense_captions(&model, &out_of_vocab).is_err());
}

#[test]
fn visual_dimensions_are_checked() {
    let model = tiny_model(0);
    let f = model.config.feature_dim;
    let spatial = vec![vec![0.1; f]; model.config.regions];
    assert!(encode_visual(&model, &vec![0.1; f], &spatial).is_ok());
    assert!(encode_visual(&model, &vec![0.1; f + 1], &spatial).is_err());
    assert!(encode_visual(&model, &vec![0.1; f], &[vec![0.1; f - 1]]).is_err());
    let (mp, sp) = encode_visual(&model, &vec![0.1; f], &spatial).unwrap();
    // ReLU output.
    assert!(mp.iter().chain(sp.iter().flatten()).all(|&x| x >= 0.0));
}

#[test]
fn stylized_word_is_embedding_then_style_projection() {
    let model = tiny_model(1);
    let c = &model.config;
    let emb = model.params.get(model.layout.word_embed);
    let se = model.params.get(model.layout.style_embed);
    let pw = model.params.get(model.layout.style_proj_w);
    let pb = model.params.get(model.layout.style_proj_b);
    for token in 0..c.vocab_size {
        for style in 0..c.style_count {
            let w = stylize_word(&model, token, style).unwrap();
            assert_eq!(w.len(), c.word_dim + c.style_dim);
            assert_eq!(&w[..c.word_dim], &emb.data[token * c.word_dim..(token + 1) * c.word_dim]);
            for i in 0..c.style_dim {
                let p = pb.data[i] + (0..c.style_dim).map(|j| pw.data[i * c.style_dim + j] * se.data[style * c.style_dim + j]).sum::<f64>();
                assert!((w[c.word_dim + i] - p).abs() <= 1e-12);
            }
        }
    }
    assert!(stylize_word(&model, c.vocab_size, 0).is_err());
    assert!(stylize_word(&model, 4, c.style_count).is_err());
}

#[test]
fn unused_token_embeddings_do_not_move() {
    // Token 7 ("sat") appears nowhere in inputs, captions or targets; with a
    // zero gradient Adam leaves its embedding row untouched.
    let mut model = tiny_model(4);
    let mut r = rng(4);
    let examples: Vec<TrainingExample> = (0..6)
        .map(|_| {
            let mut ex = random_sample(&model.config, &mut r);
            for t in ex.input.captions.iter_mut().flatten().chain(ex.target.iter_mut()) {
                if *t == 7 {
                    *t = 4;
                }
            }
            ex
        })
        .collect();
    let before = model.params.get(model.layout.word_embed).clone();
    train(&mut model, &examples, &TrainConfig { epochs: 3, ..TrainConfig::default() }).unwrap();
    let after = model.params.get(model.layout.word_embed);
    let d = model.config.word_dim;
    assert_eq!(&after.data[7 * d..8 * d], &before.data[7 * d..8 * d]);
    assert_ne!(&after.data[4 * d..5 * d], &before.data[4 * d..5 * d]);
}

#[test]
fn non_finite_parameters_abort_training() {
    let mut model = tiny_model(2);
    let examples = vec![random_sample(&model.config, &mut rng(2))];
    model.params.get_mut(model.layout.out_b).data[4] = f64::NAN;
    let err = train(&mut model, &examples, &TrainConfig { epochs: 1, ..TrainConfig::default() }).unwrap_err();
    assert!(matches!(err, Error::Training(_)), "{err}");
}

/// Output that ignores its inputs: log-softmax of the output bias.
fn constant_model(bias: &[(usize, f64)]) -> FusionModel {
    let mut model = tiny_model(0);
    model.params.get_mut(model.layout.out_w).fill(0.0);
    let b = model.params.get_mut(model.layout.out_b);
    b.fill(0.0);
    for &(tok, v) in bias {
        b.data[tok] = v;
    }
    model
}

fn encoded(model: &FusionModel) -> caption_xray::fusion::EncodedImage {
    encode_image(model, &random_input(&model.config, &mut rng(9), None)).unwrap()
}

#[test]
fn repetition_penalty_caps_a_dominant_token() {
    // Logit 5 against 0: after k earlier uses the margin is 5 - 2k, so the
    // token wins exactly three times.
    let model = constant_model(&[(5, 5.0)]);
    let enc = encoded(&model);
    let config = BeamConfig {
        max_len: Some(6),
        ..BeamConfig::default()
    };
    let greedy = greedy_decode(&model, &enc, 0, &config).unwrap();
    assert_eq!(greedy.iter().filter(|&&t| t == 5).count(), 3);
    assert_eq!(&greedy[..3], &[5, 5, 5]);
    let beam = beam_search(&model, &enc, 0, &config).unwrap();
    assert!(beam.tokens.iter().filter(|&&t| t == 5).count() <= 3);
}

#[test]
fn special_tokens_are_never_emitted() {
    let model = constant_model(&[(PAD, 30.0), (BOS, 30.0), (UNK, 30.0)]);
    let enc = encoded(&model);
    for beam_size in [1, 3] {
        let config = BeamConfig {
            beam_size,
            max_len: Some(5),
            ..BeamConfig::default()
        };
        let out = beam_search(&model, &enc, 1, &config).unwrap();
        assert!(out.tokens.iter().all(|&t| t > UNK), "{:?}", out.tokens);
        let g = greedy_decode(&model, &enc, 1, &config).unwrap();
        assert!(g.iter().all(|&t| t > UNK));
    }
}

#[test]
fn no_ending_at_the_first_step_or_after_a_function_word() {
    // EOS dominates but is banned at step 0 and after "the" (id 4); "the"
    // wins twice (3, then 1), a neutral token follows, then EOS.
    let model = constant_model(&[(EOS, 10.0), (4, 3.0)]);
    let enc = encoded(&model);
    let config = BeamConfig::default();
    let greedy = greedy_decode(&model, &enc, 0, &config).unwrap();
    assert_eq!(greedy, vec![4, 4, 5]);
    let beam = beam_search(&model, &enc, 0, &BeamConfig { beam_size: 1, ..config.clone() }).unwrap();
    assert_eq!(beam.tokens, greedy);
    let wide = beam_search(&model, &enc, 0, &config).unwrap();
    assert!(!wide.tokens.is_empty());
    assert_ne!(wide.tokens.last(), Some(&4));
}

#[test]
fn beam_of_one_is_greedy_and_decoding_is_deterministic() {
    for seed in 0..8 {
        let model = tiny_model(seed);
        let enc = encoded(&model);
        let config = BeamConfig {
            beam_size: 1,
            ..BeamConfig::default()
        };
        let style = (seed % 3) as usize;
        let beam = beam_search(&model, &enc, style, &config).unwrap();
        assert_eq!(beam.tokens, greedy_decode(&model, &enc, style, &config).unwrap());
        let wide = BeamConfig::default();
        assert_eq!(beam_search(&model, &enc, style, &wide).unwrap(), beam_search(&model, &enc, style, &wide).unwrap());
    }
    let model = tiny_model(0);
    let enc = encoded(&model);
    assert!(beam_search(&model, &enc, 0, &BeamConfig { beam_size: 0, ..BeamConfig::default() }).is_err());
    assert!(beam_search(&model, &enc, 3, &BeamConfig::default()).is_err());
}

#[test]
fn beam_score_is_length_normalized_log_probability() {
    let model = tiny_model(5);
    let enc = encoded(&model);
    let config = BeamConfig {
        repetition_penalty: 0.0,
        ..BeamConfig::default()
    };
    let out = beam_search(&model, &enc, 0, &config).unwrap();
    // Re-score the returned tokens plus EOS by stepping the decoder.
    let mut state = DecoderState::initial(&model);
    let mut prev = BOS;
    let mut sum = 0.0;
    let mut seq = out.tokens.clone();
    let ended = seq.len() < model.config.max_caption_len;
    if ended {
        seq.push(EOS);
    }
    for &tok in &seq {
        let w = stylize_word(&model, prev, 0).unwrap();
        let (lp, next) = decode_step(&model, &state, &w, &enc);
        sum += lp[tok];
        state = next;
        prev = tok;
    }
    assert!((out.score - sum / seq.len() as f64).abs() <= 1e-12);
}

#[test]
fn checkpoint_file_round_trip_preserves_decoding() {
    let model = tiny_model(6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_checkpoint(&model, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, model);
    let enc = encoded(&model);
    let config = BeamConfig::default();
    assert_eq!(beam_search(&back, &enc, 2, &config).unwrap(), beam_search(&model, &enc, 2, &config).unwrap());
    std::fs::write(&path, "{\"format\":\"other\"}").unwrap();
    assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));
}
