//! Touch exploration of a frozen snapshot: each time the finger enters a
//! new region, the region's class name is spoken at a distance-dependent
//! volume.

use std::collections::VecDeque;

use crate::feedback::{volume_for_distance, Utterance, Volume};
use crate::protocol::Snapshot;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Ready,
    Active,
    Ended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SessionOptions {
    /// Regions are 4-connected components of one class instead of whole
    /// classes, so two separate people are two regions.
    pub regions_by_component: bool,
}

/// Side of the square window whose valid depths give the touch distance.
pub const DEPTH_WINDOW: usize = 5;

#[derive(Debug, Clone)]
pub struct ExplorationSession {
    id: String,
    snapshot: Snapshot,
    state: SessionState,
    /// Region id and class of the last announced region.
    last_region: Option<(u32, u8)>,
    /// Component id per pixel when regions are components.
    components: Option<Vec<u32>>,
}

/// Opens a session on `snapshot`. The session is ready at once; the caller
/// sends the returned READY cue flag to the client.
pub fn start_session(id: impl Into<String>, snapshot: Snapshot, opts: SessionOptions) -> Result<(ExplorationSession, bool)> {
    snapshot.validate()?;
    let components = opts
        .regions_by_component
        .then(|| label_components(&snapshot.labels, snapshot.width, snapshot.height));
    let s = ExplorationSession {
        id: id.into(),
        snapshot,
        state: SessionState::Ready,
        last_region: None,
        components,
    };
    Ok((s, true))
}

/// 4-connected component labelling, ids in raster order of first pixel.
fn label_components(labels: &[u8], w: usize, h: usize) -> Vec<u32> {
    let mut comp = vec![u32::MAX; labels.len()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if comp[start] != u32::MAX {
            continue;
        }
        comp[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / w, i % w);
            let mut visit = |j: usize| {
                if comp[j] == u32::MAX && labels[j] == labels[start] {
                    comp[j] = next;
                    queue.push_back(j);
                }
            };
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
        }
        next += 1;
    }
    comp
}

/// Pixel under a normalized coordinate; x = 1 and y = 1 land on the last column/row.
pub fn touch_pixel(x: f64, y: f64, width: usize, height: usize) -> (usize, usize) {
    let col = ((x * width as f64) as usize).min(width - 1);
    let row = ((y * height as f64) as usize).min(height - 1);
    (row, col)
}

/// Median of the valid depths (metres) in the window centred on a pixel.
/// With an even count the two middle values are averaged.
pub fn window_median_depth(depth_mm: &[u16], width: usize, height: usize, row: usize, col: usize) -> Option<f64> {
    let half = DEPTH_WINDOW / 2;
    let mut vals: Vec<u16> = Vec::with_capacity(DEPTH_WINDOW * DEPTH_WINDOW);
    for r in row.saturating_sub(half)..=(row + half).min(height - 1) {
        for c in col.saturating_sub(half)..=(col + half).min(width - 1) {
            let d = depth_mm[r * width + c];
            if d > 0 {
                vals.push(d);
            }
        }
    }
    if vals.is_empty() {
        return None;
    }
    vals.sort_unstable();
    let n = vals.len();
    let mm = if n % 2 == 1 {
        f64::from(vals[n / 2])
    } else {
        (f64::from(vals[n / 2 - 1]) + f64::from(vals[n / 2])) / 2.0
    };
    Some(mm / 1000.0)
}

impl ExplorationSession {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn is_live(&self) -> bool {
        self.state != SessionState::Ended
    }

    /// Class index of the region last announced.
    pub fn last_class(&self) -> Option<u8> {
        self.last_region.map(|(_, class)| class)
    }

    /// Looks up the touched pixel. Speaks only when the finger has entered a
    /// region other than the last announced one; the first touch of a
    /// session always enters a region.
    pub fn touch(&mut self, x: f64, y: f64) -> Result<Option<Utterance>> {
        if self.state == SessionState::Ended {
            return Err(Error::Session(format!("session {} has ended", self.id)));
        }
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::Coordinates { x, y });
        }
        self.state = SessionState::Active;
        let s = &self.snapshot;
        let (row, col) = touch_pixel(x, y, s.width, s.height);
        let i = row * s.width + col;
        let class = s.labels[i];
        let region = match &self.components {
            Some(c) => c[i],
            None => u32::from(class),
        };
        if self.last_region.map(|(r, _)| r) == Some(region) {
            return Ok(None);
        }
        self.last_region = Some((region, class));
        let d = window_median_depth(&s.depth_mm, s.width, s.height, row, col);
        let v = volume_for_distance(d, f64::from(s.near_mm) / 1000.0, f64::from(s.far_mm) / 1000.0)?;
        Ok(Some(Utterance {
            text: s.classes[usize::from(class)].clone(),
            volume: Volume::from_f64(v)?,
        }))
    }

    pub fn end(&mut self) -> Result<()> {
        if self.state == SessionState::Ended {
            return Err(Error::Session(format!("session {} already ended", self.id)));
        }
        self.state = SessionState::Ended;
        Ok(())
    }
}
