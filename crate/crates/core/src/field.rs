use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_REVISION: AtomicU64 = AtomicU64::new(1);

fn next_revision() -> u64 {
    NEXT_REVISION.fetch_add(1, Ordering::Relaxed)
}

/// Nodal coefficients of a P1 phase field.
///
/// Every construction or mutation draws a fresh revision number from a
/// process-wide counter, so data derived from one state of the field can be
/// checked against the field it is later used with.
#[derive(Debug)]
pub struct PhaseField {
    values: Vec<f64>,
    revision: u64,
}

impl PhaseField {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            revision: next_revision(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Mutable access; bumps the revision.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.revision = next_revision();
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl Clone for PhaseField {
    fn clone(&self) -> Self {
        // a clone may diverge from the original, so it gets its own revision
        Self::new(self.values.clone())
    }
}

impl From<Vec<f64>> for PhaseField {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn revisions_change_on_mutation() {
        let mut f = PhaseField::new(vec![0.0; 3]);
        let r0 = f.revision();
        f.values_mut()[0] = 1.0;
        assert_ne!(f.revision(), r0);
        let g = f.clone();
        assert_ne!(g.revision(), f.revision());
        assert_eq!(g.values(), f.values());
    }
}
