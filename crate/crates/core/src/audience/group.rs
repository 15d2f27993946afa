//! Per-feature clustering, partition intersection and the group tree that
//! maps any profile to an intervention bin.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kmeans::select_k;
use super::metadata::{
    InterventionMessage, UserMetadata, FEATURE_ABBREVIATIONS, FEATURE_NAMES, NUMERIC_FEATURES,
    N_FEATURES,
};
use super::AudienceError;
use crate::models::tree::{DecisionTree, TreeConfig};

pub const GROUP_MODEL_VERSION: u32 = 1;

/// Users share a group iff their cluster tuples are equal. Group ids are
/// handed out in first-seen order.
pub fn group_users(tuples: &[Vec<usize>], n_features: usize) -> Result<Vec<usize>, AudienceError> {
    let mut ids: HashMap<&[usize], usize> = HashMap::new();
    let mut out = Vec::with_capacity(tuples.len());
    for (user, t) in tuples.iter().enumerate() {
        if t.len() != n_features {
            return Err(AudienceError::MissingFeature {
                user,
                expected: n_features,
                actual: t.len(),
            });
        }
        let next = ids.len();
        out.push(*ids.entry(t.as_slice()).or_insert(next));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for GroupConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 8,
            restarts: 10,
            max_depth: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ClusterMethod {
    /// Values are the clusters (0 and 1).
    Boolean,
    /// A single value across all users.
    Constant,
    /// k-means on z-scored values.
    KMeans {
        mean: f64,
        std: f64,
        /// Centroids in raw units, ascending.
        centroids: Vec<f64>,
        silhouette: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureClustering {
    pub feature: String,
    pub abbreviation: String,
    pub k: usize,
    #[serde(flatten)]
    pub method: ClusterMethod,
}

/// Clusters one feature column and returns its description and per-user
/// cluster ids.
pub fn cluster_feature(
    index: usize,
    values: &[f64],
    config: &GroupConfig,
) -> Result<(FeatureClustering, Vec<usize>), AudienceError> {
    let describe = |k, method| FeatureClustering {
        feature: FEATURE_NAMES[index].to_string(),
        abbreviation: FEATURE_ABBREVIATIONS[index].to_string(),
        k,
        method,
    };
    if UserMetadata::is_boolean_feature(index) {
        let ids: Vec<usize> = values.iter().map(|v| usize::from(*v != 0.0)).collect();
        let k = if ids.iter().all(|&i| i == ids[0]) { 1 } else { 2 };
        return Ok((describe(k, ClusterMethod::Boolean), ids));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std == 0.0 {
        return Ok((describe(1, ClusterMethod::Constant), vec![0; values.len()]));
    }
    let z: Vec<f64> = values.iter().map(|v| (v - mean) / std).collect();
    let sel = select_k(
        &z,
        config.k_min..=config.k_max,
        config.restarts,
        config.seed.wrapping_mul(31).wrapping_add(index as u64),
    )?;
    let method = ClusterMethod::KMeans {
        mean,
        std,
        centroids: sel.fit.centroids.iter().map(|c| c * std + mean).collect(),
        silhouette: sel.silhouette,
    };
    Ok((describe(sel.k, method), sel.fit.assignments))
}

/// Picks the member nearest the bin centroid of z-scored numeric features.
///
/// Members are first ordered by `(created_at_mms, message_id)`, so the
/// result does not depend on input order; the earliest member wins ties.
pub fn select_representative(members: &[InterventionMessage]) -> Result<&InterventionMessage, AudienceError> {
    if members.is_empty() {
        return Err(AudienceError::EmptyBin);
    }
    let mut order: Vec<&InterventionMessage> = members.iter().collect();
    order.sort_by(|a, b| {
        (a.author.created_at_mms, &a.message_id, &a.text).cmp(&(b.author.created_at_mms, &b.message_id, &b.text))
    });
    let rows: Vec<[f64; N_FEATURES]> = order.iter().map(|m| m.author.to_features()).collect();
    let n = rows.len() as f64;
    let mut z = vec![[0.0; NUMERIC_FEATURES]; rows.len()];
    for f in 0..NUMERIC_FEATURES {
        let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n;
        let std = (rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n).sqrt();
        if std > 0.0 {
            for (zi, r) in z.iter_mut().zip(&rows) {
                zi[f] = (r[f] - mean) / std;
            }
        }
    }
    let mut centroid = [0.0; NUMERIC_FEATURES];
    for zi in &z {
        for f in 0..NUMERIC_FEATURES {
            centroid[f] += zi[f] / n;
        }
    }
    let dist = |zi: &[f64; NUMERIC_FEATURES]| -> f64 {
        zi.iter().zip(&centroid).map(|(a, b)| (a - b).powi(2)).sum()
    };
    let mut best = 0;
    for i in 1..z.len() {
        if dist(&z[i]) < dist(&z[best]) {
            best = i;
        }
    }
    Ok(order[best])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupInfo {
    pub group_id: usize,
    /// Cluster id per feature.
    pub clusters: Vec<usize>,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub bin_id: usize,
    pub members: Vec<String>,
    pub representative: String,
    /// Groups whose users land here.
    pub groups: Vec<usize>,
}

/// One decision on the route from the root to a bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinPathStep {
    pub feature: String,
    pub abbreviation: String,
    pub threshold: f64,
    pub value: f64,
    /// `value <= threshold`.
    pub went_left: bool,
}

/// Everything needed to route a profile to a bin and pick its message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub feature_abbreviations: Vec<String>,
    pub config: GroupConfig,
    pub features: Vec<FeatureClustering>,
    pub groups: Vec<GroupInfo>,
    /// Group of each pool message, in pool order.
    pub message_groups: Vec<usize>,
    pub tree: DecisionTree,
    pub bins: Vec<Bin>,
    /// The pool with `bin_id` filled in.
    pub messages: Vec<InterventionMessage>,
}

impl GroupModel {
    pub fn build(pool: &[InterventionMessage], config: &GroupConfig) -> Result<Self, AudienceError> {
        if pool.is_empty() {
            return Err(AudienceError::EmptyPool);
        }
        let rows: Vec<[f64; N_FEATURES]> = pool.iter().map(|m| m.author.to_features()).collect();
        let mut features = Vec::with_capacity(N_FEATURES);
        let mut tuples = vec![Vec::with_capacity(N_FEATURES); pool.len()];
        for f in 0..N_FEATURES {
            let column: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            let (desc, ids) = cluster_feature(f, &column, config)?;
            features.push(desc);
            for (t, id) in tuples.iter_mut().zip(ids) {
                t.push(id);
            }
        }
        let message_groups = group_users(&tuples, N_FEATURES)?;
        let n_groups = message_groups.iter().max().map_or(0, |m| m + 1);
        if n_groups < 2 {
            return Err(AudienceError::SingleGroup);
        }
        let mut groups: Vec<GroupInfo> = (0..n_groups)
            .map(|g| GroupInfo {
                group_id: g,
                clusters: Vec::new(),
                size: 0,
            })
            .collect();
        for (t, &g) in tuples.iter().zip(&message_groups) {
            if groups[g].size == 0 {
                groups[g].clusters = t.clone();
            }
            groups[g].size += 1;
        }
        let row_refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let tree = DecisionTree::fit(
            &row_refs,
            &message_groups,
            n_groups,
            &TreeConfig {
                max_depth: config.max_depth,
                min_leaf: 1,
            },
        )?;
        let mut messages = pool.to_vec();
        let mut bins: Vec<Bin> = (0..tree.leaf_count())
            .map(|b| Bin {
                bin_id: b,
                members: Vec::new(),
                representative: String::new(),
                groups: Vec::new(),
            })
            .collect();
        for ((m, row), &g) in messages.iter_mut().zip(&rows).zip(&message_groups) {
            let b = tree.leaf_id(row)?;
            m.bin_id = Some(b);
            bins[b].members.push(m.message_id.clone());
            if !bins[b].groups.contains(&g) {
                bins[b].groups.push(g);
            }
        }
        for bin in &mut bins {
            let members: Vec<InterventionMessage> = messages
                .iter()
                .filter(|m| m.bin_id == Some(bin.bin_id))
                .cloned()
                .collect();
            bin.representative = select_representative(&members)?.message_id.clone();
            bin.groups.sort_unstable();
        }
        Ok(Self {
            format_version: GROUP_MODEL_VERSION,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            feature_abbreviations: FEATURE_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
            config: config.clone(),
            features,
            groups,
            message_groups,
            tree,
            bins,
            messages,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    /// Leaf reached by `target`.
    pub fn assign_bin(&self, target: &UserMetadata) -> usize {
        self.tree
            .leaf_id(&target.to_features())
            .expect("metadata always has every feature")
    }

    /// Bin and the decisions that lead to it.
    pub fn route(&self, target: &UserMetadata) -> (usize, Vec<BinPathStep>) {
        let x = target.to_features();
        let steps = self
            .tree
            .path(&x)
            .expect("metadata always has every feature")
            .into_iter()
            .map(|s| BinPathStep {
                feature: FEATURE_NAMES[s.feature].to_string(),
                abbreviation: FEATURE_ABBREVIATIONS[s.feature].to_string(),
                threshold: s.threshold,
                value: s.value,
                went_left: s.went_left,
            })
            .collect();
        (self.assign_bin(target), steps)
    }

    pub fn message(&self, message_id: &str) -> Option<&InterventionMessage> {
        self.messages.iter().find(|m| m.message_id == message_id)
    }

    pub fn representative(&self, bin_id: usize) -> Option<&InterventionMessage> {
        self.bins
            .get(bin_id)
            .and_then(|b| self.message(&b.representative))
    }

    /// Pool messages whose author does not route to the message's own bin.
    pub fn remap_violations(&self) -> Vec<&str> {
        self.messages
            .iter()
            .filter(|m| {
                let bin = self.assign_bin(&m.author);
                !self.bins[bin].members.contains(&m.message_id)
            })
            .map(|m| m.message_id.as_str())
            .collect()
    }

    /// Bins whose members come from more than one group.
    pub fn mixed_bins(&self) -> Vec<usize> {
        self.bins.iter().filter(|b| b.groups.len() > 1).map(|b| b.bin_id).collect()
    }

    pub fn to_json(&self) -> Result<String, AudienceError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self, AudienceError> {
        let m: Self = serde_json::from_str(json)?;
        if m.format_version != GROUP_MODEL_VERSION {
            return Err(AudienceError::Version(m.format_version));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AudienceError> {
        std::fs::write(path, self.to_json()?).map_err(|e| AudienceError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AudienceError> {
        let s = std::fs::read_to_string(path).map_err(|e| AudienceError::Io(e.to_string()))?;
        Self::from_json(&s)
    }
}
