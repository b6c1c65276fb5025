use std::collections::HashMap;
use std::sync::Arc;

use super::{row, triangle_ok, ThreeJRow};
use crate::error::{invalid, Result};

/// Every row (m1 = -l1..=l1) of one triple, evaluated once.
#[derive(Clone, Debug)]
pub struct TripleRows {
    pub l1: i32,
    pub l2: i32,
    pub l3: i32,
    rows: Vec<ThreeJRow>,
}

impl TripleRows {
    pub fn compute(l1: i32, l2: i32, l3: i32) -> Result<Self> {
        if !triangle_ok(l1, l2, l3) {
            return Err(invalid!("triple ({l1}, {l2}, {l3}) violates the triangle rule"));
        }
        let mut rows = Vec::with_capacity((2 * l1 + 1) as usize);
        for m1 in -l1..=l1 {
            let mut values = Vec::new();
            let m2_min = row::row_into(l1, l2, l3, m1, &mut values);
            rows.push(ThreeJRow { m2_min, values });
        }
        Ok(Self { l1, l2, l3, rows })
    }

    /// Row for a given m1, |m1| <= l1.
    pub fn row(&self, m1: i32) -> &ThreeJRow {
        &self.rows[(m1 + self.l1) as usize]
    }
}

/// Memo of [`TripleRows`] keyed by (l1, l2, l3).
///
/// Owned by one worker while it fills; [`ThreeJCache::freeze`] turns it into
/// an immutable handle that may be shared across threads.
#[derive(Debug, Default)]
pub struct ThreeJCache {
    map: HashMap<(i32, i32, i32), Arc<TripleRows>>,
}

impl ThreeJCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&mut self, l1: i32, l2: i32, l3: i32) -> Result<Arc<TripleRows>> {
        if let Some(r) = self.map.get(&(l1, l2, l3)) {
            return Ok(Arc::clone(r));
        }
        let r = Arc::new(TripleRows::compute(l1, l2, l3)?);
        self.map.insert((l1, l2, l3), Arc::clone(&r));
        Ok(r)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn freeze(self) -> FrozenThreeJCache {
        FrozenThreeJCache { map: self.map }
    }
}

/// Read-only cache, safe for concurrent lookups.
#[derive(Debug, Clone, Default)]
pub struct FrozenThreeJCache {
    map: HashMap<(i32, i32, i32), Arc<TripleRows>>,
}

impl FrozenThreeJCache {
    pub fn get(&self, l1: i32, l2: i32, l3: i32) -> Option<&TripleRows> {
        self.map.get(&(l1, l2, l3)).map(|r| r.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_returns_same_rows() {
        let mut c = ThreeJCache::new();
        let a = c.rows(2, 3, 5).unwrap();
        let b = c.rows(2, 3, 5).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(c.len(), 1);
        let frozen = c.freeze();
        assert_eq!(frozen.get(2, 3, 5).unwrap().row(0), a.row(0));
        assert!(frozen.get(1, 1, 1).is_none());
    }

    #[test]
    fn rejects_bad_triangle() {
        assert!(TripleRows::compute(1, 1, 3).is_err());
    }
}
