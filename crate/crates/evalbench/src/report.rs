//! The accuracy table: six scenario rows by four method columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sightwalk_core::{aca, ActionLabel, Bucket, Dataset, SemanticMap, Split};
use sightwalk_nets::{segment, SemanticSource};

use crate::methods::{Method, Methods};
use crate::{Error, Result};

/// Published real-data accuracies (percent) in the same rows and columns.
/// They document the layout target; desk-scale runs are not expected to hit them.
pub const REFERENCE_ACA: [[f64; 4]; 6] = [
    [92.2, 94.1, 95.7, 99.6],
    [87.4, 92.3, 93.3, 98.2],
    [90.0, 93.0, 94.0, 98.7],
    [78.1, 90.0, 92.3, 97.9],
    [90.2, 77.1, 93.8, 99.3],
    [57.6, 70.5, 74.4, 98.6],
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub bucket: Bucket,
    pub samples: usize,
    /// ACA in percent per method, in [`Method::ALL`] order; `None` when the
    /// bucket has no samples.
    pub aca: [Option<f64>; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub dataset_seed: u64,
    pub samples: usize,
    pub semantic_source: &'static str,
    /// Model checksum per method name; methods without a model are absent.
    pub checksums: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    /// ACA in percent over all samples.
    pub overall: [Option<f64>; 4],
    pub metadata: ReportMetadata,
    /// Every method's prediction for every sample, in dataset order.
    #[serde(skip)]
    pub predictions: BTreeMap<Method, Vec<ActionLabel>>,
}

fn percent(pred: &[ActionLabel], labels: &[ActionLabel]) -> Result<Option<f64>> {
    if labels.is_empty() {
        return Ok(None);
    }
    Ok(Some(100.0 * aca(pred, labels)?))
}

/// Runs all four methods over a test set and tabulates ACA per bucket.
pub fn evaluate_methods(test: &Dataset, methods: &Methods<'_>, source: SemanticSource<'_>) -> Result<EvalReport> {
    if test.manifest.split != Split::Test {
        return Err(Error::Input("evaluation needs the test split".into()));
    }
    for m in Method::ALL {
        let got = methods.get(m).nav_mode();
        if got.is_some() && got != m.nav_mode() {
            return Err(Error::Method {
                method: m.name(),
                reason: format!("model reads {} input", got.unwrap().method_name()),
            });
        }
    }
    let predicted: Vec<SemanticMap> = match source {
        SemanticSource::GroundTruth => Vec::new(),
        SemanticSource::Model(seg) => test
            .samples
            .iter()
            .map(|s| segment(seg, &s.frame))
            .collect::<sightwalk_nets::Result<_>>()?,
    };
    let semantics: Vec<&SemanticMap> = match source {
        SemanticSource::GroundTruth => test.samples.iter().map(|s| &s.semantic_gt).collect(),
        SemanticSource::Model(_) => predicted.iter().collect(),
    };
    let samples: Vec<_> = test.samples.iter().collect();
    let labels: Vec<ActionLabel> = samples.iter().map(|s| s.action).collect();

    let mut predictions = BTreeMap::new();
    let mut checksums = BTreeMap::new();
    for m in Method::ALL {
        let p = methods.get(m);
        let pred = p.predict(&samples, &semantics)?;
        if pred.len() != samples.len() {
            return Err(Error::Method {
                method: m.name(),
                reason: format!("{} predictions for {} samples", pred.len(), samples.len()),
            });
        }
        if let Some(sum) = p.checksum() {
            checksums.insert(m.name().to_string(), sum);
        }
        predictions.insert(m, pred);
    }

    let mut rows = Vec::with_capacity(Bucket::ALL.len());
    for bucket in Bucket::ALL {
        let idx: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].bucket == bucket).collect();
        let lab: Vec<_> = idx.iter().map(|&i| labels[i]).collect();
        let mut cells = [None; 4];
        for (k, m) in Method::ALL.into_iter().enumerate() {
            let pred: Vec<_> = idx.iter().map(|&i| predictions[&m][i]).collect();
            cells[k] = percent(&pred, &lab)?;
        }
        rows.push(ReportRow {
            bucket,
            samples: idx.len(),
            aca: cells,
        });
    }
    let mut overall = [None; 4];
    for (k, m) in Method::ALL.into_iter().enumerate() {
        overall[k] = percent(&predictions[&m], &labels)?;
    }
    Ok(EvalReport {
        rows,
        overall,
        metadata: ReportMetadata {
            dataset_seed: test.manifest.generator_seed,
            samples: samples.len(),
            semantic_source: source.name(),
            checksums,
        },
        predictions,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.1}"))
}

impl EvalReport {
    pub fn row(&self, bucket: Bucket) -> &ReportRow {
        self.rows.iter().find(|r| r.bucket == bucket).expect("every bucket has a row")
    }

    /// ACA in percent for one cell.
    pub fn get(&self, bucket: Bucket, method: Method) -> Option<f64> {
        self.row(bucket).aca[method as usize]
    }

    /// Aligned text table; absent cells print as `-`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ACA (%) on {} test samples, dataset seed {}, semantics from {}",
            self.metadata.samples, self.metadata.dataset_seed, self.metadata.semantic_source);
        let _ = write!(s, "{:<14}{:>8}", "", "n");
        for m in Method::ALL {
            let _ = write!(s, "{:>9}", m.name());
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{:<14}{:>8}", r.bucket.title(), r.samples);
            for v in r.aca {
                let _ = write!(s, "{:>9}", cell(v));
            }
            s.push('\n');
        }
        for (name, sum) in &self.metadata.checksums {
            let _ = writeln!(s, "{name} sha256 {sum}");
        }
        s
    }

    /// `bucket,samples,RGB-C,Depth-T,RGBD-C,RGBDS`; absent cells are empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bucket,samples");
        for m in Method::ALL {
            s.push(',');
            s.push_str(m.name());
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{},{}", r.bucket, r.samples);
            for v in r.aca {
                let _ = write!(s, ",{}", v.map(|x| format!("{x:.1}")).unwrap_or_default());
            }
            s.push('\n');
        }
        s
    }

    /// Writes `report.txt`, `report.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), self.to_text())?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Input(e.to_string()))?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        Ok(())
    }
}
