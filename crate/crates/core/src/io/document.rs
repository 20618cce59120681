//! JSON framework documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::framework::{EdgeSpec, Framework, Material, Realization};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pin: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub from: String,
    pub to: String,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEntry {
    #[serde(rename = "A")]
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameworkDocument {
    pub dimension: usize,
    pub knots: Vec<KnotEntry>,
    pub edges: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialEntry>,
    /// Realization name → knot id → coordinates. Pinned knots may be omitted.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub named_realizations: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

impl FrameworkDocument {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(IoError::from_json)
    }

    fn knot_number(&self, id: &str) -> Result<usize, IoError> {
        self.knots
            .iter()
            .position(|k| k.id == id)
            .map(|p| p + 1)
            .ok_or_else(|| IoError::Semantic(format!("edge refers to unknown knot id \"{id}\"")))
    }

    pub fn to_framework(&self) -> Result<Framework, IoError> {
        let mut seen = std::collections::BTreeSet::new();
        for k in &self.knots {
            if !seen.insert(k.id.as_str()) {
                return Err(IoError::Semantic(format!("duplicate knot id \"{}\"", k.id)));
            }
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Ok(EdgeSpec::new(self.knot_number(&e.from)?, self.knot_number(&e.to)?, e.length)))
            .collect::<Result<Vec<_>, IoError>>()?;
        let pins: Vec<(usize, Vec<f64>)> =
            self.knots.iter().enumerate().filter_map(|(k, entry)| entry.pin.clone().map(|p| (k + 1, p))).collect();
        let material = self.material.map_or(Material::default(), |m| Material::with_area(m.area));
        let ids = self.knots.iter().map(|k| k.id.clone()).collect();
        Framework::with_ids(self.dimension, ids, &edges, &pins, material).map_err(|e| IoError::Semantic(e.to_string()))
    }

    /// Named realizations in name order, pins filled in.
    pub fn realizations(&self, fw: &Framework) -> Result<Vec<(String, Realization)>, IoError> {
        let n = fw.dimension();
        let mut out = Vec::new();
        for (name, coords) in &self.named_realizations {
            for id in coords.keys() {
                if !fw.knot_ids().iter().any(|k| k == id) {
                    return Err(IoError::Semantic(format!("realization \"{name}\" names unknown knot \"{id}\"")));
                }
            }
            let mut flat = Vec::with_capacity(fw.knot_count() * n);
            for (k, id) in fw.knot_ids().iter().enumerate() {
                let p = coords
                    .get(id)
                    .or_else(|| fw.pins().get(&k))
                    .ok_or_else(|| IoError::Semantic(format!("realization \"{name}\" lacks knot \"{id}\"")))?;
                if p.len() != n {
                    return Err(IoError::Semantic(format!(
                        "realization \"{name}\": knot \"{id}\" needs {n} coordinates"
                    )));
                }
                flat.extend_from_slice(p);
            }
            let r =
                Realization::new(fw, flat).map_err(|e| IoError::Semantic(format!("realization \"{name}\": {e}")))?;
            out.push((name.clone(), r));
        }
        Ok(out)
    }
}

/// Parses a framework document. Knot ids map to 1-based knot numbers in
/// declaration order.
pub fn parse_framework(text: &str) -> Result<Framework, IoError> {
    FrameworkDocument::parse(text)?.to_framework()
}
