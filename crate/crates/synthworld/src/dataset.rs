use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sightwalk_core::{Bucket, ClassTable, Dataset, Sample, Split};

use crate::generate::{generate_scene_with, SceneClasses};
use crate::geometry::Pose;
use crate::oracle::{label_render, OracleConfig};
use crate::plan::{RenderSettings, ScenePlan};
use crate::render::render_with_id;
use crate::sim::{simulate_walk, OraclePolicy, WalkConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCount {
    pub bucket: Bucket,
    pub count: usize,
}

/// Seed of the `index`-th scene in a dataset generated from `seed`.
pub fn sample_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// How the camera pose of each sample is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    /// Share of samples taken part-way along a pilot walk instead of at the
    /// scene's start pose. Walk frames show the turned, close-up views a
    /// walker actually meets.
    pub walk_fraction: f64,
    pub max_walk_steps: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            walk_fraction: 0.5,
            max_walk_steps: 16,
        }
    }
}

/// Pose reached after a short oracle-driven walk from the start pose, or the
/// start pose itself when the draw says so or the walk touches anything.
fn sample_pose(plan: &ScenePlan, seed: u64, sampling: &Sampling, oracle: &OracleConfig) -> Result<Pose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0F_9A1C);
    if sampling.max_walk_steps == 0 || !rng.random_bool(sampling.walk_fraction.clamp(0.0, 1.0)) {
        return Ok(plan.start);
    }
    let mut still = plan.clone();
    for o in &mut still.obstacles {
        o.motion = None;
    }
    let cfg = WalkConfig {
        max_steps: rng.random_range(1..=sampling.max_walk_steps),
        seed: rng.random(),
        ..WalkConfig::default()
    };
    let tr = simulate_walk(&still, &mut OraclePolicy(*oracle), &cfg)?;
    Ok(if tr.collisions == 0 {
        *tr.poses.last().expect("walk has a start pose")
    } else {
        plan.start
    })
}

/// Renders every requested scene and labels it with the pilot rule.
/// Samples appear in request order.
pub fn generate_dataset(
    counts: &[BucketCount],
    seed: u64,
    classes: &ClassTable,
    split: Split,
) -> Result<Dataset> {
    generate_dataset_with(
        counts,
        seed,
        classes,
        split,
        &RenderSettings::default(),
        &OracleConfig::default(),
        &Sampling::default(),
    )
}

pub fn generate_dataset_with(
    counts: &[BucketCount],
    seed: u64,
    classes: &ClassTable,
    split: Split,
    render: &RenderSettings,
    oracle: &OracleConfig,
    sampling: &Sampling,
) -> Result<Dataset> {
    if counts.is_empty() || counts.iter().any(|c| c.count == 0) {
        return Err(Error::InvalidRequest("every bucket count must be at least 1".into()));
    }
    let scene_classes = SceneClasses::from_table(classes)?;
    let jobs: Vec<Bucket> = counts
        .iter()
        .flat_map(|c| std::iter::repeat(c.bucket).take(c.count))
        .collect();
    let prefix = match split {
        Split::Train => "train",
        Split::Test => "test",
    };
    let samples = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &bucket)| {
            let scene_seed = sample_seed(seed, i);
            let plan = generate_scene_with(bucket, scene_seed, &scene_classes, render);
            let pose = sample_pose(&plan, scene_seed, sampling, oracle)?;
            let out = render_with_id(&plan, pose, format!("{prefix}-{i:06}"))?;
            let action = label_render(&out, &plan, oracle);
            Ok(Sample {
                frame: out.frame,
                semantic_gt: out.semantic,
                action,
                bucket,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ds = Dataset::new(split, seed, classes.clone(), samples)?;
    let [l, s, r] = ds.manifest.label_counts();
    log::info!(
        "generated {} {prefix} samples: turn_left={l} go_straight={s} turn_right={r}",
        ds.len()
    );
    Ok(ds)
}
