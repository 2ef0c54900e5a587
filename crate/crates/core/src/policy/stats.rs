use std::collections::BTreeMap;

use crate::model::ActionId;

/// Running mean and pull count for one arm.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmStats {
    mean: f64,
    count: u64,
}

impl ArmStats {
    pub fn observe(&mut self, x: f64) {
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
    }

    /// `None` until the arm has been observed.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Per-(user, method) and per-action statistics for one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BanditState {
    /// `[user][method]`.
    pub methods: Vec<Vec<ArmStats>>,
    pub actions: BTreeMap<ActionId, ArmStats>,
}

impl BanditState {
    pub fn with_methods(methods_per_user: impl IntoIterator<Item = usize>) -> Self {
        BanditState {
            methods: methods_per_user
                .into_iter()
                .map(|m| vec![ArmStats::default(); m])
                .collect(),
            actions: BTreeMap::new(),
        }
    }

    pub fn user_pulls(&self, user: usize) -> u64 {
        self.methods[user].iter().map(ArmStats::count).sum()
    }
}

/// Index of the smallest key, lowest index on ties. Skips `None` keys.
pub(crate) fn argmin_by_key<T>(items: &[T], mut key: impl FnMut(&T) -> Option<f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, item) in items.iter().enumerate() {
        if let Some(k) = key(item) {
            if best.is_none_or(|(_, b)| k < b) {
                best = Some((i, k));
            }
        }
    }
    best.map(|(i, _)| i)
}
