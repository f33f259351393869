//! Cell decompositions of p-adic boxes.
//!
//! A [`CosetGrid`] enumerates the cells of `p^{-s} o^n / p^m o^n`: the
//! standard window of radius `q^s` cut into translates of the lattice
//! `p^m o^n`.  Every locally constant function the library touches is
//! resolved by such a grid, and every integral over a compact set is a
//! finite, exact sum of cell values times the cell volume `q^{-nm}`.
//!
//! Cells are indexed per axis by `idx in [0, p^{m+s})` with representative
//! `idx * p^{-s}`, and flat indices run lexicographically (axis 0 slowest),
//! which pins a deterministic enumeration order everywhere.

use num_bigint::BigInt;
use num_traits::Signed;

use crate::cyclo::Rat;
use crate::error::{Error, Result};
use crate::linalg::{pow_rat, vp_rat};
use crate::padic::PPhase;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetGrid {
    p: u64,
    n: usize,
    m: i64,
    s: i64,
}

impl CosetGrid {
    pub fn new(p: u64, n: usize, m: i64, s: i64) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid("p must be at least 2"));
        }
        if n == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if m + s < 0 {
            return Err(Error::invalid(format!(
                "window p^{{-{s}}} is smaller than the lattice p^{m}: m + s must be >= 0"
            )));
        }
        if (m + s) as u32 as f64 * (p as f64).log2() > 96.0 {
            return Err(Error::invalid("grid depth m + s too large to index"));
        }
        Ok(CosetGrid { p, n, m, s })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lattice exponent: cells are translates of `p^m o^n`.
    pub fn lattice_level(&self) -> i64 {
        self.m
    }

    /// Window exponent: the grid covers `p^{-s} o^n`.
    pub fn window_level(&self) -> i64 {
        self.s
    }

    /// Cells per axis: `p^{m+s}`.
    pub fn axis_count(&self) -> u128 {
        (self.p as u128).pow((self.m + self.s) as u32)
    }

    /// Total number of cells: `p^{n(m+s)}`.
    pub fn len(&self) -> u128 {
        self.axis_count().pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check_cap(&self, cap: u128) -> Result<()> {
        let needed = self.len();
        if needed > cap {
            return Err(Error::CapExceeded { needed, cap });
        }
        Ok(())
    }

    /// The dual grid under the standard pairing: `(m, s) -> (s, m)`.
    pub fn dual(&self) -> CosetGrid {
        CosetGrid { p: self.p, n: self.n, m: self.s, s: self.m }
    }

    pub fn iter(&self) -> impl Iterator<Item = u128> {
        0..self.len()
    }

    pub fn decode(&self, flat: u128) -> Vec<u64> {
        let ax = self.axis_count();
        let mut rest = flat;
        let mut idx = vec![0u64; self.n];
        for a in (0..self.n).rev() {
            idx[a] = (rest % ax) as u64;
            rest /= ax;
        }
        debug_assert_eq!(rest, 0, "flat index out of range");
        idx
    }

    pub fn encode(&self, idx: &[u64]) -> u128 {
        assert_eq!(idx.len(), self.n);
        let ax = self.axis_count();
        let mut flat: u128 = 0;
        for &i in idx {
            debug_assert!((i as u128) < ax);
            flat = flat * ax + i as u128;
        }
        flat
    }

    /// Representative of a cell: per axis `idx * p^{-s}`.
    pub fn rep(&self, flat: u128) -> Vec<Rat> {
        let scale = pow_rat(self.p, -self.s);
        self.decode(flat)
            .iter()
            .map(|&i| Rat::from_integer(BigInt::from(i)) * &scale)
            .collect()
    }

    /// Haar volume of one cell (`vol(o^n) = 1`).
    pub fn cell_volume(&self) -> Rat {
        pow_rat(self.p, -(self.n as i64) * self.m)
    }

    /// Haar volume of the whole window.
    pub fn window_volume(&self) -> Rat {
        pow_rat(self.p, (self.n as i64) * self.s)
    }

    /// The cell containing `v`, or `None` if `v` lies outside the window.
    /// (Values are reduced modulo the lattice, so any translate of an
    /// in-window point locates to its cell.)
    pub fn locate(&self, v: &[Rat]) -> Option<u128> {
        assert_eq!(v.len(), self.n);
        let ax = BigInt::from(self.axis_count());
        let mut idx = Vec::with_capacity(self.n);
        for x in v {
            let c = x * pow_rat(self.p, self.s);
            if vp_rat(&c, self.p).unwrap_or(0) < 0 {
                return None;
            }
            // c is p-integral: idx = c mod p^{m+s} via a modular inverse of
            // the (p-unit) denominator.
            let num = ((c.numer() % &ax) + &ax) % &ax;
            let den = ((c.denom() % &ax) + &ax) % &ax;
            let r = (num * inverse_mod_big(&den, &ax)) % &ax;
            idx.push(u64::try_from(r).expect("axis index fits u64"));
        }
        Some(self.encode(&idx))
    }

    /// Norm exponent of the representative: `|rep| = q^e` (None for the
    /// zero cell).
    pub fn norm_exp(&self, flat: u128) -> Option<i64> {
        let idx = self.decode(flat);
        let min_v = idx
            .iter()
            .filter(|&&i| i != 0)
            .map(|&i| {
                let mut v = 0i64;
                let mut i = i;
                while i % self.p == 0 {
                    i /= self.p;
                    v += 1;
                }
                v
            })
            .min()?;
        Some(self.s - min_v)
    }

    /// Flat indices (in `finer`) of the subcells of `flat`.  Requires the
    /// same `p, n`, a finer lattice (`finer.m >= m`) and a window at least
    /// as large (`finer.s >= s`).
    pub fn subcells(&self, finer: &CosetGrid, flat: u128) -> Vec<u128> {
        assert_eq!((self.p, self.n), (finer.p, finer.n));
        assert!(finer.m >= self.m && finer.s >= self.s, "subcells needs a refinement");
        let shift = pow_u128(self.p, (finer.s - self.s) as u32);
        let stride = pow_u128(self.p, (self.m + finer.s) as u32);
        let per_axis = pow_u128(self.p, (finer.m - self.m) as u32);
        let coarse = self.decode(flat);
        // Per axis: j = idx * p^{s'-s} + t * p^{m+s'}, t in [0, p^{m'-m}).
        let mut out = Vec::new();
        let mut t = vec![0u128; self.n];
        loop {
            let idx: Vec<u64> = (0..self.n)
                .map(|a| (coarse[a] as u128 * shift + t[a] * stride) as u64)
                .collect();
            out.push(finer.encode(&idx));
            // odometer over t
            let mut a = self.n;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                t[a] += 1;
                if t[a] < per_axis {
                    break;
                }
                t[a] = 0;
            }
        }
    }

    /// Exact phase of the standard pairing between a cell of this grid and
    /// a cell of the dual grid: `sum_i x_i xi_i` with denominator
    /// `p^{m+s}`.
    pub fn pairing_phase(&self, x: u128, dual: &CosetGrid, xi: u128) -> PPhase {
        assert_eq!(self.p, dual.p);
        assert_eq!(self.n, dual.n);
        assert_eq!(self.m + self.s, dual.m + dual.s, "grids are not dual");
        let k = (self.m + self.s) as u32;
        let modulus = pow_u128(self.p, k);
        let xs = self.decode(x);
        let xis = dual.decode(xi);
        let mut acc: u128 = 0;
        for a in 0..self.n {
            acc = (acc + (xs[a] as u128 % modulus) * (xis[a] as u128 % modulus)) % modulus;
        }
        PPhase::new(self.p, k, acc)
    }
}

/// The unit sphere `S^{n-1} = {|x| = 1}` cut into cells of `o^n / p^m o^n`,
/// grouped by facet signature (which coordinates are units), together with
/// a fundamental domain for the scaling action of `o^×`.
///
/// The domain pins the first unit coordinate to the cell of `1`: a cell
/// belongs to the domain for axis `i` when coordinates before `i` lie in
/// `p o`, coordinate `i` is `1 mod p^m`, and the rest are free.  Every
/// `o^×`-orbit of sphere cells meets the domain in exactly one cell, and
/// the quotient measure of a domain cell (normalized so that the sphere
/// decomposition matches the plain integral) is `q^{-(n-1)m}`.
#[derive(Clone, Debug)]
pub struct SphereCells {
    pub grid: CosetGrid,
    /// facet signature (bitmask of unit axes) -> sphere cells
    pub facets: std::collections::BTreeMap<u32, Vec<u128>>,
    /// (pinned axis, cell) pairs forming the fundamental domain
    pub domain: Vec<(usize, u128)>,
}

pub fn sphere_facets(p: u64, n: usize, m: i64, cap: u128) -> Result<SphereCells> {
    if m < 1 {
        return Err(Error::invalid("sphere cells need resolution m >= 1"));
    }
    let grid = CosetGrid::new(p, n, m, 0)?;
    grid.check_cap(cap)?;
    let mut facets: std::collections::BTreeMap<u32, Vec<u128>> = Default::default();
    let mut domain = Vec::new();
    for flat in grid.iter() {
        let idx = grid.decode(flat);
        let mut mask = 0u32;
        for (a, &i) in idx.iter().enumerate() {
            if i % p != 0 {
                mask |= 1 << a;
            }
        }
        if mask == 0 {
            continue; // |x| < 1
        }
        facets.entry(mask).or_default().push(flat);
        let pinned = (0..n).find(|a| mask & (1 << a) != 0).unwrap();
        if idx[pinned] == 1 {
            domain.push((pinned, flat));
        }
    }
    Ok(SphereCells { grid, facets, domain })
}

impl SphereCells {
    /// Quotient-measure weight of one fundamental-domain cell.
    pub fn domain_cell_weight(&self) -> Rat {
        pow_rat(
            self.grid.p(),
            -((self.grid.dim() as i64 - 1) * self.grid.lattice_level()),
        )
    }

    /// Total (additive Haar) measure of the sphere: sum of cell volumes.
    pub fn sphere_volume(&self) -> Rat {
        let cells: u128 = self.facets.values().map(|v| v.len() as u128).sum();
        self.grid.cell_volume() * Rat::from_integer(BigInt::from(cells))
    }
}

fn pow_u128(p: u64, k: u32) -> u128 {
    (p as u128).pow(k)
}

fn inverse_mod_big(a: &BigInt, m: &BigInt) -> BigInt {
    let e = num_integer::Integer::extended_gcd(a, m);
    assert!(e.gcd == BigInt::from(1), "inverse_mod_big: not coprime");
    let r = e.x % m;
    if r.is_negative() {
        r + m
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::rat;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    #[test]
    fn counts_and_volumes() {
        let g = CosetGrid::new(3, 2, 1, 1).unwrap();
        assert_eq!(g.axis_count(), 9);
        assert_eq!(g.len(), 81);
        assert_eq!(g.cell_volume(), rat(1, 9));
        assert_eq!(g.window_volume(), rat(9, 1));
        // Total volume = number of cells * cell volume.
        let total: Rat = g.cell_volume() * Rat::from_integer(81.into());
        assert_eq!(total, g.window_volume());
        assert!(CosetGrid::new(3, 1, -2, 1).is_err());
    }

    #[test]
    fn locate_inverts_rep() {
        let g = CosetGrid::new(3, 2, 1, 1).unwrap();
        for flat in g.iter() {
            let rep = g.rep(flat);
            assert_eq!(g.locate(&rep), Some(flat));
        }
        // Outside the window.
        assert_eq!(g.locate(&[rat(1, 27), rat(0, 1)]), None);
        // Lattice translates land in the same cell: 1/3 and 1/3 + 3.
        let a = g.locate(&[rat(1, 3), Rat::one()]).unwrap();
        let b = g.locate(&[rat(10, 3), Rat::one()]).unwrap();
        assert_eq!(a, b);
        // Denominators prime to p are fine: 1/2 = 2 mod 3.
        let c = g.locate(&[rat(1, 2), Rat::zero()]).unwrap();
        let d = g.locate(&[rat(2, 1), Rat::zero()]).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn subcells_partition_the_parent() {
        let coarse = CosetGrid::new(3, 2, 0, 1).unwrap();
        let fine = CosetGrid::new(3, 2, 2, 1).unwrap();
        let mut seen = std::collections::HashSet::new();
        for cell in coarse.iter() {
            for sub in coarse.subcells(&fine, cell) {
                // Each subcell rep must locate back to the parent cell.
                assert_eq!(coarse.locate(&fine.rep(sub)), Some(cell));
                assert!(seen.insert(sub), "subcell listed twice");
            }
        }
        assert_eq!(seen.len() as u128, fine.len());
    }

    #[test]
    fn norm_exponents() {
        let g = CosetGrid::new(3, 1, 2, 1).unwrap();
        assert_eq!(g.norm_exp(0), None);
        let one_third = g.locate(&[rat(1, 3)]).unwrap();
        assert_eq!(g.norm_exp(one_third), Some(1));
        let unit = g.locate(&[rat(1, 1)]).unwrap();
        assert_eq!(g.norm_exp(unit), Some(0));
        let three = g.locate(&[rat(3, 1)]).unwrap();
        assert_eq!(g.norm_exp(three), Some(-1));
    }

    #[test]
    fn pairing_phase_is_the_product_over_the_common_denominator() {
        let g = CosetGrid::new(5, 2, 1, 1).unwrap();
        let d = g.dual();
        let x = g.encode(&[3, 7]);
        let xi = d.encode(&[4, 2]);
        // (3*4 + 7*2) / 25 = 26/25 = 1/25 mod 1.
        assert_eq!(g.pairing_phase(x, &d, xi).as_rat(), rat(1, 25));
    }

    #[test]
    fn sphere_cells_cover_the_unit_sphere() {
        // n = 2, p = 3, m = 1: 9 cells total, the zero cell is off-sphere
        // but so are the 3 cells with both coordinates in 3o... count:
        // cells with at least one unit coordinate: 9 - 1 = 8?  No: idx pairs
        // over {0,1,2}^2, unit means idx % 3 != 0, so non-sphere pairs are
        // (0,0) only => 8 sphere cells, volume 8/9 = 1 - q^{-2}.
        let sc = sphere_facets(3, 2, 1, 1 << 20).unwrap();
        let total: usize = sc.facets.values().map(Vec::len).sum();
        assert_eq!(total, 8);
        assert_eq!(sc.sphere_volume(), rat(8, 9));
        // Facet signatures: axis-0 unit only (mask 1), axis-1 unit only
        // (mask 2), both (mask 3), with 2, 2, 4 cells.
        assert_eq!(sc.facets[&1].len(), 2);
        assert_eq!(sc.facets[&2].len(), 2);
        assert_eq!(sc.facets[&3].len(), 4);
        // Fundamental domain: x0 = 1 (x1 free: 3 cells) or x0 in 3o, x1 = 1
        // (1 cell): 4 cells, each of quotient weight q^{-(n-1)m} = 1/3, and
        // 4/3 * vol(o^x) = 4/3 * 2/3 = 8/9 recovers the sphere volume.
        assert_eq!(sc.domain.len(), 4);
        assert_eq!(sc.domain_cell_weight(), rat(1, 3));
        let unit_group_vol = rat(2, 3);
        let quotient_vol = rat(4, 1) * sc.domain_cell_weight();
        assert_eq!(quotient_vol * unit_group_vol, sc.sphere_volume());
    }

    #[test]
    fn sphere_domain_hits_every_orbit_once() {
        // p = 2, n = 3, m = 2: check that scaling each domain cell by all
        // units mod p^m reproduces the sphere cells without overlap.
        let sc = sphere_facets(2, 3, 2, 1 << 20).unwrap();
        let g = &sc.grid;
        let pm = 4u64;
        let mut seen = std::collections::BTreeSet::new();
        for &(_, flat) in &sc.domain {
            let idx = g.decode(flat);
            for u in (1..pm).step_by(2) {
                let scaled: Vec<u64> = idx.iter().map(|&i| (i * u) % pm).collect();
                assert!(seen.insert(g.encode(&scaled)), "orbits overlap");
            }
        }
        let total: usize = sc.facets.values().map(Vec::len).sum();
        assert_eq!(seen.len(), total);
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(flat in 0u128..3u128.pow(6)) {
            let g = CosetGrid::new(3, 3, 1, 1).unwrap();
            prop_assert!(flat < g.len());
            let idx = g.decode(flat);
            prop_assert_eq!(g.encode(&idx), flat);
        }

        #[test]
        fn sphere_volume_matches_the_closed_form(p in prop::sample::select(vec![2u64, 3, 5]),
                                                 n in 1usize..4, m in 1i64..3) {
            let sc = sphere_facets(p, n, m, 1 << 24).unwrap();
            let q_minus_n = pow_rat(p, -(n as i64));
            prop_assert_eq!(sc.sphere_volume(), Rat::from_integer(BigInt::from(1)) - q_minus_n);
            // every orbit meets the domain exactly once => counts match
            let units_mod_pm = (p - 1) * p.pow(m as u32 - 1);
            let total: usize = sc.facets.values().map(Vec::len).sum();
            prop_assert_eq!(sc.domain.len() as u64 * units_mod_pm, total as u64);
        }
    }
}
