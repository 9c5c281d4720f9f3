#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Mutex;

use sightwalk_core::{ActionLabel, ClassTable, Provenance, RgbdFrame, SemanticMap};
use sightwalk_interact::{FramePercept, Perception};
use sightwalk_nets::InstructionResult;

pub const W: usize = 16;
pub const H: usize = 12;

pub fn classes() -> ClassTable {
    ClassTable::from_names(&["floor", "wall", "person"]).unwrap()
}

/// Top half: a person (1 m) in columns 0..8, wall (3 m) in 8..16. Bottom half: floor at 2 m.
pub fn frame(id: &str) -> (RgbdFrame, SemanticMap) {
    let mut labels = vec![0u8; W * H];
    let mut depth = vec![2.0f32; W * H];
    for r in 0..H / 2 {
        for c in 0..W {
            let person = c < W / 2;
            labels[r * W + c] = if person { 2 } else { 1 };
            depth[r * W + c] = if person { 1.0 } else { 3.0 };
        }
    }
    (
        RgbdFrame::new(id, W, H, vec![90; W * H * 3], depth).unwrap(),
        SemanticMap::new(W, H, labels, Provenance::GroundTruth).unwrap(),
    )
}

pub fn result(action: ActionLabel) -> InstructionResult {
    let mut probabilities = [0.25; 3];
    probabilities[action.ordinal()] = 0.5;
    InstructionResult { action, probabilities }
}

/// Looks up precomputed semantics and instructions by frame id.
pub struct Scripted {
    pub classes: ClassTable,
    pub table: Mutex<HashMap<String, (SemanticMap, ActionLabel)>>,
}

impl Scripted {
    pub fn new(classes: ClassTable) -> Self {
        Self {
            classes,
            table: Mutex::new(HashMap::new()),
        }
    }

    pub fn add(&self, id: &str, semantic: SemanticMap, action: ActionLabel) {
        self.table.lock().unwrap().insert(id.to_string(), (semantic, action));
    }
}

impl Perception for Scripted {
    fn classes(&self) -> &ClassTable {
        &self.classes
    }

    fn perceive(&self, frame: &RgbdFrame) -> sightwalk_interact::Result<FramePercept> {
        let (semantic, action) = self.table.lock().unwrap()[frame.frame_id()].clone();
        Ok(FramePercept {
            frame: frame.clone(),
            semantic,
            instruction: result(action),
        })
    }
}

/// Touch path across the scripted frame: person, wall, floor, person, person.
/// Four region entries.
pub const PATH: [(f64, f64); 5] = [(0.1, 0.1), (0.9, 0.1), (0.9, 0.9), (0.2, 0.2), (0.3, 0.3)];
pub const PATH_SPOKEN: [&str; 4] = ["person", "wall", "floor", "person"];
