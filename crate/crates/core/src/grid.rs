//! Toroidal grid addressing, five-cell neighborhoods and the shared snapshot board.

use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::nn::{ModelSnapshot, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridConfig {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub row: usize,
    pub col: usize,
}

impl CellId {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

impl GridConfig {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config(format!("grid {rows}x{cols} has no cells")));
        }
        Ok(Self { rows, cols })
    }

    pub fn square(m: usize) -> Result<Self> {
        Self::new(m, m)
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| CellId::new(r, c)))
    }

    pub fn index_of(&self, c: CellId) -> usize {
        c.row * self.cols + c.col
    }

    pub fn contains(&self, c: CellId) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    /// Center, north, south, west, east, wrapped and deduplicated.
    pub fn neighborhood_of(&self, c: CellId) -> Neighborhood {
        assert!(self.contains(c), "cell {c} outside {}x{} grid", self.rows, self.cols);
        let (r, k) = (c.row, c.col);
        let candidates = [
            c,
            CellId::new((r + self.rows - 1) % self.rows, k),
            CellId::new((r + 1) % self.rows, k),
            CellId::new(r, (k + self.cols - 1) % self.cols),
            CellId::new(r, (k + 1) % self.cols),
        ];
        let mut members = Vec::with_capacity(5);
        for cand in candidates {
            if !members.contains(&cand) {
                members.push(cand);
            }
        }
        Neighborhood { center: c, members }
    }
}

impl std::str::FromStr for GridConfig {
    type Err = Error;

    /// Parses `KxK` or `RxC`.
    fn from_str(s: &str) -> Result<Self> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Config(format!("grid `{s}` is not of the form RxC")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("grid `{s}` is not of the form RxC")))
        };
        GridConfig::new(parse(r)?, parse(c)?)
    }
}

impl fmt::Display for GridConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub center: CellId,
    /// `members[0]` is the center, followed by N, S, W, E without repeats.
    pub members: Vec<CellId>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Generator and discriminator published together by one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellModels<T> {
    pub generator: ModelSnapshot<T>,
    pub discriminator: ModelSnapshot<T>,
}

impl<T> CellModels<T> {
    pub fn version(&self) -> u64 {
        self.generator.version
    }
}

/// Latest published pair of every cell.
///
/// Each slot has a single writer (its cell) and any number of readers. A
/// publish swaps in a whole new pair, so readers never see a generator from
/// one publish next to a discriminator from another.
#[derive(Debug)]
pub struct SnapshotBoard<T> {
    grid: GridConfig,
    slots: Vec<RwLock<Arc<CellModels<T>>>>,
}

impl<T: Clone> SnapshotBoard<T> {
    /// Board seeded with every cell's version-0 models, in row-major order.
    pub fn new(grid: GridConfig, initial: Vec<CellModels<T>>) -> Result<Self> {
        if initial.len() != grid.cell_count() {
            return Err(Error::Config(format!(
                "board for {grid} needs {} initial pairs, got {}",
                grid.cell_count(),
                initial.len()
            )));
        }
        for (cell, pair) in grid.cells().zip(&initial) {
            check_pair(cell, pair)?;
        }
        Ok(Self {
            grid,
            slots: initial.into_iter().map(|p| RwLock::new(Arc::new(p))).collect(),
        })
    }

    pub fn grid(&self) -> GridConfig {
        self.grid
    }

    /// Replaces cell `c`'s pair. Versions must advance by exactly one.
    pub fn publish(&self, c: CellId, generator: ModelSnapshot<T>, discriminator: ModelSnapshot<T>) -> Result<()> {
        let pair = CellModels {
            generator,
            discriminator,
        };
        check_pair(c, &pair)?;
        let slot = &self.slots[self.grid.index_of(c)];
        let mut guard = slot.write();
        if pair.version() != guard.version() + 1 {
            return Err(Error::Config(format!(
                "cell {c} published version {} after {}",
                pair.version(),
                guard.version()
            )));
        }
        *guard = Arc::new(pair);
        Ok(())
    }

    /// Shared handle to the current pair of one cell.
    pub fn latest(&self, c: CellId) -> Arc<CellModels<T>> {
        Arc::clone(&self.slots[self.grid.index_of(c)].read())
    }

    /// Deep copies of the neighborhood's current models, in member order.
    pub fn gather(&self, nb: &Neighborhood) -> (Vec<ModelSnapshot<T>>, Vec<ModelSnapshot<T>>) {
        nb.members
            .iter()
            .map(|&m| {
                let pair = self.latest(m);
                (pair.generator.clone(), pair.discriminator.clone())
            })
            .unzip()
    }

    /// A read-only copy sharing the current pairs; later publishes to
    /// `self` do not show through.
    pub fn snapshot(&self) -> SnapshotBoard<T> {
        SnapshotBoard {
            grid: self.grid,
            slots: self.slots.iter().map(|s| RwLock::new(Arc::clone(&s.read()))).collect(),
        }
    }

    /// Current pairs of all cells, row-major.
    pub fn freeze(&self) -> Vec<Arc<CellModels<T>>> {
        self.grid.cells().map(|c| self.latest(c)).collect()
    }
}

fn check_pair<T>(c: CellId, pair: &CellModels<T>) -> Result<()> {
    let g = &pair.generator;
    let d = &pair.discriminator;
    if g.role != Role::Generator || d.role != Role::Discriminator {
        return Err(Error::Config(format!("cell {c} published models in the wrong roles")));
    }
    if g.origin != c || d.origin != c {
        return Err(Error::Config(format!("cell {c} published models owned by another cell")));
    }
    if g.version != d.version {
        return Err(Error::Config(format!("cell {c} published mismatched versions")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{mlp_layers, Activation, ModelParams};

    fn cid(r: usize, c: usize) -> CellId {
        CellId::new(r, c)
    }

    #[test]
    fn interior_neighborhood() {
        let g = GridConfig::square(4).unwrap();
        let nb = g.neighborhood_of(cid(1, 1));
        assert_eq!(nb.members, vec![cid(1, 1), cid(0, 1), cid(2, 1), cid(1, 0), cid(1, 2)]);
    }

    #[test]
    fn corner_wraps_around() {
        let g = GridConfig::square(4).unwrap();
        let nb = g.neighborhood_of(cid(0, 0));
        assert_eq!(nb.members, vec![cid(0, 0), cid(3, 0), cid(1, 0), cid(0, 3), cid(0, 1)]);
    }

    #[test]
    fn degenerate_grids_deduplicate() {
        let one = GridConfig::square(1).unwrap();
        assert_eq!(one.neighborhood_of(cid(0, 0)).members, vec![cid(0, 0)]);
        let two = GridConfig::square(2).unwrap();
        assert_eq!(two.neighborhood_of(cid(0, 0)).members, vec![cid(0, 0), cid(1, 0), cid(0, 1)]);
        let strip = GridConfig::new(1, 4).unwrap();
        assert_eq!(strip.neighborhood_of(cid(0, 0)).members, vec![cid(0, 0), cid(0, 3), cid(0, 1)]);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!("3x3".parse::<GridConfig>().unwrap(), GridConfig::square(3).unwrap());
        assert_eq!("2X5".parse::<GridConfig>().unwrap(), GridConfig::new(2, 5).unwrap());
        assert!("0x3".parse::<GridConfig>().is_err());
        assert!("three".parse::<GridConfig>().is_err());
    }

    fn pair(c: CellId, version: u64, fill: f64) -> CellModels<f64> {
        let layers = mlp_layers(&[1, 1], Activation::Identity, Activation::Identity);
        let p = ModelParams::new(layers, vec![fill, fill]).unwrap();
        let snap = |role| ModelSnapshot {
            params: p.clone(),
            role,
            learning_rate: 0.1,
            origin: c,
            version,
        };
        CellModels {
            generator: snap(Role::Generator),
            discriminator: snap(Role::Discriminator),
        }
    }

    fn board(m: usize) -> SnapshotBoard<f64> {
        let g = GridConfig::square(m).unwrap();
        let init = g.cells().map(|c| pair(c, 0, 0.0)).collect();
        SnapshotBoard::new(g, init).unwrap()
    }

    #[test]
    fn gather_sees_latest_publish() {
        let b = board(3);
        let c = cid(1, 1);
        let p1 = pair(c, 1, 1.0);
        b.publish(c, p1.generator, p1.discriminator).unwrap();
        let p2 = pair(c, 2, 2.0);
        b.publish(c, p2.generator, p2.discriminator).unwrap();
        let nb = b.grid().neighborhood_of(cid(0, 1));
        let (gens, discs) = b.gather(&nb);
        assert_eq!(gens.len(), 5);
        let idx = nb.members.iter().position(|&m| m == c).unwrap();
        assert_eq!(gens[idx].version, 2);
        assert_eq!(discs[idx].params.weights()[0], 2.0);
    }

    #[test]
    fn publish_rejects_skipped_versions_and_foreign_origin() {
        let b = board(2);
        let p = pair(cid(0, 0), 2, 1.0);
        assert!(b.publish(cid(0, 0), p.generator, p.discriminator).is_err());
        let p = pair(cid(1, 1), 1, 1.0);
        assert!(b.publish(cid(0, 0), p.generator, p.discriminator).is_err());
    }

    #[test]
    fn gathered_copies_are_detached() {
        let b = board(3);
        let nb = b.grid().neighborhood_of(cid(0, 0));
        let (mut gens, _) = b.gather(&nb);
        gens[0].params = gens[0].params.with_weights(vec![9.0, 9.0]).unwrap();
        assert_eq!(b.latest(cid(0, 0)).generator.params.weights(), &[0.0, 0.0]);
    }

    #[test]
    fn two_by_two_gathers_three() {
        let b = board(2);
        let (g, d) = b.gather(&b.grid().neighborhood_of(cid(0, 0)));
        assert_eq!((g.len(), d.len()), (3, 3));
    }

    #[test]
    fn concurrent_reads_never_tear_pairs() {
        let b = board(1);
        let c = cid(0, 0);
        std::thread::scope(|s| {
            s.spawn(|| {
                for v in 1..=2000u64 {
                    let p = pair(c, v, v as f64);
                    b.publish(c, p.generator, p.discriminator).unwrap();
                }
            });
            s.spawn(|| {
                let nb = b.grid().neighborhood_of(c);
                let mut last = 0;
                for _ in 0..2000 {
                    let (g, d) = b.gather(&nb);
                    assert_eq!(g[0].version, d[0].version);
                    assert_eq!(g[0].params.weights()[0], d[0].params.weights()[0]);
                    assert!(g[0].version >= last);
                    last = g[0].version;
                }
            });
        });
    }
}
