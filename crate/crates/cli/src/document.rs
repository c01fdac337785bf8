//! Versioned JSON documents for cap systems and transformations.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use koebe_core::hypcore::{LorentzMap, SphericalCap};
use koebe_core::koebe::{KoebeCapSystem, KoebeCombinatorics};

pub const CAPS_FORMAT: &str = "koebe-caps/1";
pub const TRANSFORM_FORMAT: &str = "koebe-transform/1";
pub const LORENTZ_TOLERANCE: f64 = 1e-8;

pub type Metadata = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapEntry {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapSystemDocument {
    pub format: String,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    pub vertex_caps: Vec<CapEntry>,
    #[serde(default)]
    pub face_caps: Vec<CapEntry>,
    #[serde(default)]
    pub faces: Vec<Vec<usize>>,
    #[serde(default)]
    pub metadata: Metadata,
}

fn default_dimension() -> usize {
    2
}

fn entry(cap: &SphericalCap) -> CapEntry {
    CapEntry {
        center: cap.center().iter().copied().collect(),
        radius: cap.radius(),
    }
}

impl CapSystemDocument {
    pub fn from_system(system: &KoebeCapSystem, metadata: Metadata) -> Self {
        Self {
            format: CAPS_FORMAT.into(),
            dimension: 2,
            vertex_caps: system.vertex_caps().iter().map(entry).collect(),
            face_caps: system.face_caps().iter().map(entry).collect(),
            faces: system.combinatorics().faces().to_vec(),
            metadata,
        }
    }

    /// A caps-only document on `S^d`.
    pub fn from_caps(caps: &[SphericalCap], metadata: Metadata) -> Self {
        Self {
            format: CAPS_FORMAT.into(),
            dimension: caps.first().map_or(2, |c| c.spatial_dim() - 1),
            vertex_caps: caps.iter().map(entry).collect(),
            face_caps: vec![],
            faces: vec![],
            metadata,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).context("malformed cap-system document")?;
        ensure!(
            doc.format == CAPS_FORMAT,
            "unsupported format `{}` (expected `{CAPS_FORMAT}`)",
            doc.format
        );
        ensure!(doc.dimension >= 1, "dimension must be at least 1");
        for (k, c) in doc.vertex_caps.iter().chain(&doc.face_caps).enumerate() {
            ensure!(
                c.center.len() == doc.dimension + 1,
                "cap {k}: center has {} coordinates, expected {}",
                c.center.len(),
                doc.dimension + 1
            );
            ensure!(
                c.center.iter().all(|x| x.is_finite()) && c.radius.is_finite(),
                "cap {k}: non-finite value"
            );
        }
        Ok(doc)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).with_context(|| format!("writing {}", path.display()))
    }

    fn caps(entries: &[CapEntry]) -> Result<Vec<SphericalCap>> {
        entries
            .iter()
            .enumerate()
            .map(|(k, c)| {
                SphericalCap::from_slice(&c.center, c.radius).with_context(|| format!("cap {k}"))
            })
            .collect()
    }

    pub fn vertex_cap_list(&self) -> Result<Vec<SphericalCap>> {
        Self::caps(&self.vertex_caps)
    }

    /// The Koebe cap system; needs `dimension = 2`, face caps and faces.
    pub fn to_system(&self) -> Result<KoebeCapSystem> {
        if self.dimension != 2 {
            bail!("a polyhedral cap system needs dimension 2, found {}", self.dimension);
        }
        if self.faces.is_empty() || self.face_caps.is_empty() {
            bail!("document has no faces");
        }
        let comb = KoebeCombinatorics::derive(self.vertex_caps.len(), self.faces.clone())?;
        Ok(KoebeCapSystem::new(
            Self::caps(&self.vertex_caps)?,
            Self::caps(&self.face_caps)?,
            comb,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformDocument {
    pub format: String,
    pub dimension: usize,
    /// `(d+2) x (d+2)` rows; the last coordinate is time-like.
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl TransformDocument {
    pub fn from_map(map: &LorentzMap, metadata: Metadata) -> Self {
        let m = map.matrix();
        Self {
            format: TRANSFORM_FORMAT.into(),
            dimension: m.nrows() - 2,
            matrix: (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
                .collect(),
            metadata,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).context("malformed transform document")?;
        ensure!(
            doc.format == TRANSFORM_FORMAT,
            "unsupported format `{}` (expected `{TRANSFORM_FORMAT}`)",
            doc.format
        );
        doc.to_map()?;
        Ok(doc)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).with_context(|| format!("writing {}", path.display()))
    }

    /// The map, after checking the Lorentz property.
    pub fn to_map(&self) -> Result<LorentzMap> {
        let n = self.dimension + 2;
        ensure!(
            self.matrix.len() == n && self.matrix.iter().all(|r| r.len() == n),
            "matrix must be {n}x{n}"
        );
        let m = DMatrix::from_fn(n, n, |r, c| self.matrix[r][c]);
        LorentzMap::from_matrix(m, LORENTZ_TOLERANCE).context("matrix is not a Lorentz transformation")
    }
}
