//! A small synthetic captioning world.
//!
//! A scene is two objects, an action and a place. Its visual features are
//! noisy object and place prototypes; its five dense captions describe the
//! scene in plain words; each style renders the scene with its own template.
//! Controlled corruptions produce records whose error source is known.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Map;

use crate::corpus::{tokenize, CaptionRecord, StyledText, Suspect, TokenSequence};
use crate::error::{Error, Result};

use super::beam::{beam_search, BeamConfig};
use super::forward::{encode_image, ImageInput};
use super::model::{FusionConfig, FusionModel, Vocab};
use super::train::{train, TrainConfig, TrainReport, TrainingExample};

pub const OBJECTS: [&str; 8] = ["dog", "cat", "man", "woman", "child", "bird", "horse", "boat"];
pub const ACTIONS: [&str; 6] = ["running", "sitting", "jumping", "sleeping", "playing", "swimming"];
pub const PLACES: [&str; 6] = ["beach", "park", "street", "field", "river", "garden"];

/// (style name, main template, short template). Placeholders: `{o1}`, `{o2}`,
/// `{a}` (action), `{p}` (place).
pub const STYLES: [(&str, &str, &str); 6] = [
    ("Happy", "so happy to see the {o1} {a} at the {p}", "happy {o1} {a}"),
    ("Anxious", "i am scared the {o1} is {a} near the {o2}", "nervous {o1} near {o2}"),
    ("Romantic", "a lovely {o1} {a} with the {o2} by the {p}", "lovely {o1} and {o2}"),
    ("Sarcastic", "oh great another {o1} {a} in the {p}", "great another {o1}"),
    ("Adventurous", "let us go {a} with the {o1} and the {o2}", "bold {o1} {a}"),
    ("Gloomy", "the {p} is grey and the {o1} is alone", "sad {o1} at the {p}"),
];

const FEATURE_NOISE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub main: usize,
    pub other: usize,
    pub action: usize,
    pub place: usize,
}

impl Scene {
    pub fn sample<R: Rng>(rng: &mut R) -> Self {
        let main = rng.gen_range(0..OBJECTS.len());
        let mut other = rng.gen_range(0..OBJECTS.len() - 1);
        if other >= main {
            other += 1;
        }
        Scene {
            main,
            other,
            action: rng.gen_range(0..ACTIONS.len()),
            place: rng.gen_range(0..PLACES.len()),
        }
    }

    fn fill(&self, template: &str) -> TokenSequence {
        let text = template
            .replace("{o1}", OBJECTS[self.main])
            .replace("{o2}", OBJECTS[self.other])
            .replace("{a}", ACTIONS[self.action])
            .replace("{p}", PLACES[self.place]);
        tokenize(&text)
    }

    /// Main template of `style`.
    pub fn caption(&self, style: usize) -> TokenSequence {
        self.fill(STYLES[style].1)
    }

    pub fn short_caption(&self, style: usize) -> TokenSequence {
        self.fill(STYLES[style].2)
    }

    pub fn dense_captions(&self) -> Vec<TokenSequence> {
        ["{o1} {a}", "{o2} nearby", "the {p}", "{o1} and {o2}", "a {o1} in the {p}"]
            .iter()
            .map(|t| self.fill(t))
            .collect()
    }
}

/// Object and place prototypes in feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub feature_dim: usize,
    pub regions: usize,
    object_protos: Vec<Vec<f64>>,
    place_protos: Vec<Vec<f64>>,
}

impl SyntheticWorld {
    pub fn new(seed: u64) -> Self {
        let config = FusionConfig::toy();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).expect("valid normal");
        let proto = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..config.feature_dim).map(|_| normal.sample(rng)).collect()
        };
        let object_protos = (0..OBJECTS.len()).map(|_| proto(&mut rng)).collect();
        let place_protos = (0..PLACES.len()).map(|_| proto(&mut rng)).collect();
        SyntheticWorld {
            feature_dim: config.feature_dim,
            regions: config.regions,
            object_protos,
            place_protos,
        }
    }

    pub fn style_names(&self) -> Vec<String> {
        STYLES.iter().map(|s| s.0.to_string()).collect()
    }

    /// Every word any scene can produce, in a fixed order.
    pub fn vocab(&self) -> Vocab {
        let mut words: Vec<String> = Vec::new();
        words.extend(OBJECTS.iter().map(|s| s.to_string()));
        words.extend(ACTIONS.iter().map(|s| s.to_string()));
        words.extend(PLACES.iter().map(|s| s.to_string()));
        let templates = STYLES
            .iter()
            .flat_map(|s| [s.1, s.2])
            .chain(["{o2} nearby", "a {o1} in the {p}"]);
        for t in templates {
            let literal = ["{o1}", "{o2}", "{a}", "{p}"]
                .iter()
                .fold(t.to_string(), |acc, ph| acc.replace(ph, " "));
            words.extend(tokenize(&literal).iter().map(str::to_string));
        }
        Vocab::new(words)
    }

    /// Toy configuration sized to this world's vocabulary and styles.
    pub fn model_config(&self, seed: u64) -> FusionConfig {
        FusionConfig {
            vocab_size: self.vocab().len(),
            style_count: STYLES.len(),
            feature_dim: self.feature_dim,
            regions: self.regions,
            seed,
            ..FusionConfig::toy()
        }
    }

    pub fn new_model(&self, seed: u64) -> Result<FusionModel> {
        FusionModel::new(self.model_config(seed), self.vocab(), self.style_names())
    }

    /// Noisy prototypes: the mean-pool vector averages both objects and the
    /// place; spatial regions show the main object, the other object, the
    /// place, then background noise.
    pub fn features<R: Rng>(&self, scene: &Scene, rng: &mut R) -> (Vec<f64>, Vec<Vec<f64>>) {
        let normal = Normal::new(0.0, FEATURE_NOISE).expect("valid normal");
        let zero = vec![0.0; self.feature_dim];
        let sources = [
            &self.object_protos[scene.main],
            &self.object_protos[scene.other],
            &self.place_protos[scene.place],
        ];
        let mean_pool = (0..self.feature_dim)
            .map(|i| sources.iter().map(|s| s[i]).sum::<f64>() / 3.0 + normal.sample(rng))
            .collect();
        let spatial = (0..self.regions)
            .map(|r| {
                let base = sources.get(r).copied().unwrap_or(&zero);
                base.iter().map(|v| v + normal.sample(rng)).collect()
            })
            .collect();
        (mean_pool, spatial)
    }

    pub fn image_input<R: Rng>(&self, vocab: &Vocab, scene: &Scene, rng: &mut R) -> ImageInput {
        let (mean_pool, spatial) = self.features(scene, rng);
        ImageInput {
            mean_pool,
            spatial,
            captions: scene.dense_captions().iter().map(|c| vocab.encode(c)).collect(),
        }
    }

    /// `count` clean triples with random scenes and styles.
    pub fn training_examples(&self, vocab: &Vocab, count: usize, seed: u64) -> Vec<TrainingExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let scene = Scene::sample(&mut rng);
                let style = rng.gen_range(0..STYLES.len());
                let input = self.image_input(vocab, &scene, &mut rng);
                TrainingExample {
                    input,
                    style,
                    target: vocab.encode(&scene.caption(style)),
                }
            })
            .collect()
    }
}

/// Which error, if any, to inject into generated records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corruption {
    None,
    /// Object words in the dense captions replaced by other objects.
    Caption,
    /// Current generation decoded under a different style.
    Style,
    /// Visual features taken from an unrelated scene.
    ResNext,
    /// One of the three above, drawn per record.
    #[default]
    Mixed,
}

impl Corruption {
    pub fn as_str(self) -> &'static str {
        match self {
            Corruption::None => "none",
            Corruption::Caption => "caption",
            Corruption::Style => "style",
            Corruption::ResNext => "resnext",
            Corruption::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Corruption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Corruption {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Corruption::None),
            "caption" => Ok(Corruption::Caption),
            "style" => Ok(Corruption::Style),
            "resnext" => Ok(Corruption::ResNext),
            "mixed" => Ok(Corruption::Mixed),
            _ => Err(format!("unknown corruption {s:?}")),
        }
    }
}

/// One line of the synthetic feature file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub image_id: String,
    pub mean_pool: Vec<f64>,
    pub spatial: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<CaptionRecord>,
    pub features: Vec<FeatureRecord>,
}

impl SyntheticCorpus {
    pub fn write_features<W: Write>(&self, mut out: W) -> Result<()> {
        for f in &self.features {
            serde_json::to_writer(&mut out, f)?;
            out.write_all(b"\n").map_err(|e| Error::io("writing features", e))?;
        }
        Ok(())
    }

    pub fn features_to_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_features(&mut buf)?;
        Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub size: usize,
    pub corruption: Corruption,
    pub seed: u64,
    pub beam: BeamConfig,
}

/// Everything decided before decoding, so decoding can run in parallel.
struct Plan {
    image_id: String,
    scene: Scene,
    style: usize,
    decode_style: usize,
    input: ImageInput,
    dense_captions: Vec<TokenSequence>,
    label: Option<Suspect>,
}

fn plan_record<R: Rng>(world: &SyntheticWorld, vocab: &Vocab, index: usize, corruption: Corruption, rng: &mut R) -> Plan {
    let scene = Scene::sample(rng);
    let style = rng.gen_range(0..STYLES.len());
    let kind = match corruption {
        Corruption::Mixed => *[Corruption::Caption, Corruption::Style, Corruption::ResNext]
            .choose(rng)
            .expect("nonempty"),
        other => other,
    };
    let mut dense_captions = scene.dense_captions();
    let mut feature_scene = scene;
    let mut decode_style = style;
    let label = match kind {
        Corruption::None | Corruption::Mixed => None,
        Corruption::Caption => {
            let mut swapped = scene;
            while swapped.main == scene.main || swapped.main == scene.other {
                swapped.main = rng.gen_range(0..OBJECTS.len());
            }
            while swapped.other == scene.main || swapped.other == scene.other || swapped.other == swapped.main {
                swapped.other = rng.gen_range(0..OBJECTS.len());
            }
            dense_captions = swapped.dense_captions();
            Some(Suspect::Caption)
        }
        Corruption::Style => {
            let shift = rng.gen_range(1..STYLES.len());
            decode_style = (style + shift) % STYLES.len();
            Some(Suspect::Style)
        }
        Corruption::ResNext => {
            loop {
                feature_scene = Scene::sample(rng);
                if feature_scene.main != scene.main && feature_scene.main != scene.other {
                    break;
                }
            }
            Some(Suspect::ResNext)
        }
    };
    let (mean_pool, spatial) = world.features(&feature_scene, rng);
    let input = ImageInput {
        mean_pool,
        spatial,
        captions: dense_captions.iter().map(|c| vocab.encode(c)).collect(),
    };
    Plan {
        image_id: format!("synth-{index:04}"),
        scene,
        style,
        decode_style,
        input,
        dense_captions,
        label,
    }
}

/// Generates `config.size` records. Each carries the beam-searched generation
/// for its style, generations for all other styles, the (possibly corrupted)
/// dense captions, two clean ground truths, and an error label when a
/// corruption was injected.
pub fn generate_synthetic_corpus(world: &SyntheticWorld, model: &FusionModel, config: &SynthConfig) -> Result<SyntheticCorpus> {
    if config.size == 0 {
        return Err(Error::Argument("synthetic corpus size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let plans: Vec<Plan> = (0..config.size)
        .map(|i| plan_record(world, &model.vocab, i, config.corruption, &mut rng))
        .collect();
    let decoded = plans
        .par_iter()
        .map(|plan| -> Result<(CaptionRecord, FeatureRecord)> {
            let encoded = encode_image(model, &plan.input)?;
            let text = |style: usize| -> Result<String> {
                let out = beam_search(model, &encoded, style, &config.beam)?;
                Ok(model.vocab.decode(&out.tokens))
            };
            let generation = text(plan.decode_style)?;
            let other_generations = (0..STYLES.len())
                .filter(|&s| s != plan.style)
                .map(|s| {
                    Ok(StyledText {
                        style: STYLES[s].0.to_string(),
                        text: text(s)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let record = CaptionRecord {
                image_id: plan.image_id.clone(),
                style: STYLES[plan.style].0.to_string(),
                generation,
                other_generations,
                dense_captions: plan.dense_captions.iter().map(|c| c.to_string()).collect(),
                ground_truths: vec![
                    plan.scene.caption(plan.style).to_string(),
                    plan.scene.short_caption(plan.style).to_string(),
                ],
                error_label: plan.label,
                extra: Map::new(),
            };
            let features = FeatureRecord {
                image_id: plan.image_id.clone(),
                mean_pool: plan.input.mean_pool.clone(),
                spatial: plan.input.spatial.clone(),
            };
            Ok((record, features))
        })
        .collect::<Result<Vec<_>>>()?;
    let (records, features) = decoded.into_iter().unzip();
    Ok(SyntheticCorpus { records, features })
}

/// Training-set size and schedule used to fit a model to the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldTraining {
    pub examples: usize,
    pub train: TrainConfig,
}

impl Default for WorldTraining {
    fn default() -> Self {
        WorldTraining {
            examples: 120,
            train: TrainConfig {
                epochs: 30,
                learning_rate: 0.02,
                ..TrainConfig::default()
            },
        }
    }
}

/// Fits a fresh toy model to `world`. Initialization, training data and
/// shuffling all derive from `seed`.
pub fn train_world_model(world: &SyntheticWorld, seed: u64, settings: &WorldTraining) -> Result<(FusionModel, TrainReport)> {
    let mut model = world.new_model(seed)?;
    let examples = world.training_examples(&model.vocab, settings.examples, seed.wrapping_add(1));
    let config = TrainConfig {
        seed: seed.wrapping_add(2),
        ..settings.train.clone()
    };
    let report = train(&mut model, &examples, &config)?;
    Ok((model, report))
}
