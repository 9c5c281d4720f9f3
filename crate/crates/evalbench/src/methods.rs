//! The four report columns and the predictors that fill them.

use std::fmt;

use sha2::{Digest, Sha256};
use sightwalk_core::{ActionLabel, Sample, SemanticMap};
use sightwalk_nets::navnet::{encode_sample, nav_probabilities, stack, NavMode, NavModel};
use sightwalk_nets::{depth_t_instruction, predict_instruction, segment, Error as NetsError, InstructionResult, SemanticSource};
use sightwalk_synth::{Policy, StepView};

use crate::Result;

/// Report columns, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    RgbC,
    DepthT,
    RgbdC,
    Rgbds,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::RgbC, Method::DepthT, Method::RgbdC, Method::Rgbds];

    pub fn name(self) -> &'static str {
        match self {
            Method::RgbC => "RGB-C",
            Method::DepthT => "Depth-T",
            Method::RgbdC => "RGBD-C",
            Method::Rgbds => "RGBDS",
        }
    }

    /// The network input mode this column expects, if it is a network column.
    pub fn nav_mode(self) -> Option<NavMode> {
        match self {
            Method::RgbC => Some(NavMode::Rgb),
            Method::DepthT => None,
            Method::RgbdC => Some(NavMode::Rgbd),
            Method::Rgbds => Some(NavMode::Rgbds),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Anything that turns samples into walk instructions.
pub trait Predictor {
    /// One action per sample. `semantics[i]` is the semantic plane chosen for
    /// sample `i`; predictors that do not read semantics ignore it.
    fn predict(&self, samples: &[&Sample], semantics: &[&SemanticMap]) -> Result<Vec<ActionLabel>>;

    /// Input mode of the underlying network, used to catch a model placed in
    /// the wrong column.
    fn nav_mode(&self) -> Option<NavMode> {
        None
    }

    /// Hex SHA-256 of the serialized model, for the report metadata.
    fn checksum(&self) -> Option<String> {
        None
    }
}

const CHUNK: usize = 64;

impl Predictor for NavModel {
    fn predict(&self, samples: &[&Sample], semantics: &[&SemanticMap]) -> Result<Vec<ActionLabel>> {
        let mut out = Vec::with_capacity(samples.len());
        for (ss, sem) in samples.chunks(CHUNK).zip(semantics.chunks(CHUNK)) {
            let xs = ss
                .iter()
                .zip(sem)
                .map(|(s, m)| encode_sample(&self.arch, &s.frame, Some(m)))
                .collect::<sightwalk_nets::Result<Vec<_>>>()?;
            let x = stack(&self.arch, &xs.iter().map(Vec::as_slice).collect::<Vec<_>>())?;
            out.extend(
                nav_probabilities(self, &x)?
                    .into_iter()
                    .map(|p| InstructionResult::from_probabilities(p).action),
            );
        }
        Ok(out)
    }

    fn nav_mode(&self) -> Option<NavMode> {
        Some(self.arch.mode)
    }

    fn checksum(&self) -> Option<String> {
        let bytes = self.to_checkpoint().to_bytes().ok()?;
        Some(Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// The block-depth heuristic. A frame with no valid depth at all gets
/// GoStraight, since the heuristic has nothing to choose from.
#[derive(Debug, Clone, Copy, Default)]
pub struct DepthT;

impl Predictor for DepthT {
    fn predict(&self, samples: &[&Sample], _: &[&SemanticMap]) -> Result<Vec<ActionLabel>> {
        samples
            .iter()
            .map(|s| {
                let f = &s.frame;
                match depth_t_instruction(f.depth(), f.width(), f.height()) {
                    Ok(r) => Ok(r.action),
                    Err(NetsError::NoValidDepth) => Ok(ActionLabel::GoStraight),
                    Err(e) => Err(e.into()),
                }
            })
            .collect()
    }
}

/// Answers with the ground-truth label: the perfect classifier.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityStub;

impl Predictor for IdentityStub {
    fn predict(&self, samples: &[&Sample], _: &[&SemanticMap]) -> Result<Vec<ActionLabel>> {
        Ok(samples.iter().map(|s| s.action).collect())
    }
}

/// One predictor per report column.
#[derive(Clone, Copy)]
pub struct Methods<'a> {
    pub rgb_c: &'a dyn Predictor,
    pub depth_t: &'a dyn Predictor,
    pub rgbd_c: &'a dyn Predictor,
    pub rgbds: &'a dyn Predictor,
}

impl<'a> Methods<'a> {
    pub fn get(&self, m: Method) -> &'a dyn Predictor {
        match m {
            Method::RgbC => self.rgb_c,
            Method::DepthT => self.depth_t,
            Method::RgbdC => self.rgbd_c,
            Method::Rgbds => self.rgbds,
        }
    }

    /// The same predictor in every column.
    pub fn uniform(p: &'a dyn Predictor) -> Self {
        Self {
            rgb_c: p,
            depth_t: p,
            rgbd_c: p,
            rgbds: p,
        }
    }
}

/// Drives a walk with a navigation model. RGBDS models read the semantic
/// plane from `source`: the renderer's ground truth or a segmentation model.
pub struct ModelPolicy<'a> {
    pub model: &'a NavModel,
    pub source: SemanticSource<'a>,
}

impl Policy for ModelPolicy<'_> {
    fn act(&mut self, view: &StepView<'_>) -> sightwalk_synth::Result<ActionLabel> {
        let fail = |e: NetsError| sightwalk_synth::Error::Policy(e.to_string());
        let frame = &view.render.frame;
        let predicted;
        let sem = match (self.model.arch.mode.needs_semantics(), self.source) {
            (false, _) | (true, SemanticSource::GroundTruth) => &view.render.semantic,
            (true, SemanticSource::Model(seg)) => {
                predicted = segment(seg, frame).map_err(fail)?;
                &predicted
            }
        };
        Ok(predict_instruction(self.model, frame, Some(sem)).map_err(fail)?.action)
    }
}
