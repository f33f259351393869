//! Locally constant, compactly supported functions on p-adic boxes.
//!
//! An [`SBFunction`] stores one value per cell of a [`CosetGrid`]; every
//! operation — integration, Fourier transform, convolution, affine
//! substitution — is a finite, exact sum over cells.  A function resolved
//! by `p^m o^n` and supported in `p^{-s} o^n` has a Fourier transform
//! resolved by `p^s o^n` and supported in `p^{-m} o^n`, so the transform
//! swaps the two grid parameters.
//!
//! The Fourier convention is `Ff(xi) = integral f(x) chi(-x.xi) dx` with
//! `x.xi = sum_j x_j xi_j`; the inverse uses `chi(+x.xi)`.

use num_traits::{One, ToPrimitive, Zero};

use crate::cyclo::{format_rat, parse_rat, Cyc, Rat, Value};
use crate::error::{Error, Result};
use crate::grid::{sphere_facets, CosetGrid};
use crate::linalg::{pow_rat, vp_rat, QMat};
use crate::padic::{parse_scalar, PadicScalar};

/// Hard ceiling on the cell count of any grid an operation materializes.
pub const CELL_CAP: u128 = 1 << 22;

#[derive(Clone, Debug)]
pub struct SBFunction {
    grid: CosetGrid,
    values: Vec<Value>,
}

impl SBFunction {
    pub fn new(grid: CosetGrid, values: Vec<Value>) -> Result<Self> {
        grid.check_cap(CELL_CAP)?;
        if values.len() as u128 != grid.len() {
            return Err(Error::invalid(format!(
                "value table has {} entries for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(SBFunction { grid, values })
    }

    pub fn zero_on(grid: CosetGrid) -> Result<Self> {
        grid.check_cap(CELL_CAP)?;
        let len = grid.len() as usize;
        SBFunction::new(grid, vec![Value::zero(); len])
    }

    pub fn from_fn(grid: &CosetGrid, mut f: impl FnMut(&[Rat]) -> Value) -> Result<Self> {
        grid.check_cap(CELL_CAP)?;
        let mut values = Vec::with_capacity(grid.len() as usize);
        for flat in grid.iter() {
            values.push(f(&grid.rep(flat)));
        }
        SBFunction::new(grid.clone(), values)
    }

    /// The indicator of `p^r o^n`.
    pub fn ball_indicator(p: u64, n: usize, r: i64) -> Result<Self> {
        let grid = CosetGrid::new(p, n, r.max(0), (-r).max(0))?;
        SBFunction::from_fn(&grid, |rep| {
            let inside = rep.iter().all(|c| match vp_rat(c, p) {
                None => true,
                Some(v) => v >= r,
            });
            if inside {
                Value::one()
            } else {
                Value::zero()
            }
        })
    }

    pub fn grid(&self) -> &CosetGrid {
        &self.grid
    }

    pub fn p(&self) -> u64 {
        self.grid.p()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Lattice level `m`: the function is constant on cosets of `p^m o^n`.
    pub fn resolution(&self) -> i64 {
        self.grid.lattice_level()
    }

    /// Window level `s`: the support lies inside `p^{-s} o^n`.
    pub fn support_exp(&self) -> i64 {
        self.grid.window_level()
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn value(&self, flat: u128) -> &Value {
        &self.values[flat as usize]
    }

    pub fn evaluate(&self, x: &[Rat]) -> Value {
        match self.grid.locate(x) {
            Some(flat) => self.values[flat as usize].clone(),
            None => Value::zero(),
        }
    }

    /// Re-express on a finer grid (larger lattice level and/or window).
    /// Evaluation is unchanged; new cells outside the old window are zero.
    pub fn refine(&self, m2: i64, s2: i64) -> Result<Self> {
        if m2 < self.resolution() || s2 < self.support_exp() {
            return Err(Error::invalid("refinement must not coarsen the grid"));
        }
        if m2 == self.resolution() && s2 == self.support_exp() {
            return Ok(self.clone());
        }
        let g2 = CosetGrid::new(self.p(), self.dim(), m2, s2)?;
        SBFunction::from_fn(&g2, |rep| self.evaluate(rep))
    }

    fn common_refine(&self, other: &SBFunction) -> Result<(SBFunction, SBFunction)> {
        if self.p() != other.p() || self.dim() != other.dim() {
            return Err(Error::invalid("functions live on different spaces"));
        }
        let m = self.resolution().max(other.resolution());
        let s = self.support_exp().max(other.support_exp());
        Ok((self.refine(m, s)?, other.refine(m, s)?))
    }

    /// Shrink the grid to the smallest (m, s) that still resolves the
    /// function: drop empty outer shells, merge cells with equal children.
    pub fn compact(&self) -> SBFunction {
        let mut cur = self.clone();
        loop {
            let (m, s) = (cur.resolution(), cur.support_exp());
            if m + s > 0 && cur.outer_shell_is_zero() {
                let g = CosetGrid::new(cur.p(), cur.dim(), m, s - 1).unwrap();
                cur = SBFunction::from_fn(&g, |rep| cur.evaluate(rep)).unwrap();
                continue;
            }
            if m + s > 0 && cur.siblings_agree() {
                let g = CosetGrid::new(cur.p(), cur.dim(), m - 1, s).unwrap();
                cur = SBFunction::from_fn(&g, |rep| cur.evaluate(rep)).unwrap();
                continue;
            }
            return cur;
        }
    }

    fn outer_shell_is_zero(&self) -> bool {
        let s = self.support_exp();
        self.grid.iter().all(|flat| {
            self.grid.norm_exp(flat) != Some(s) || self.values[flat as usize].is_zero()
        })
    }

    fn siblings_agree(&self) -> bool {
        let coarse =
            match CosetGrid::new(self.p(), self.dim(), self.resolution() - 1, self.support_exp()) {
                Ok(g) => g,
                Err(_) => return false,
            };
        coarse.iter().all(|parent| {
            let kids = coarse.subcells(&self.grid, parent);
            let first = &self.values[kids[0] as usize];
            kids[1..].iter().all(|&k| self.values[k as usize].eq_tol(first))
        })
    }

    pub fn add(&self, other: &SBFunction) -> Result<SBFunction> {
        let (a, b) = self.common_refine(other)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x.add(y)).collect();
        SBFunction::new(a.grid, values)
    }

    pub fn sub(&self, other: &SBFunction) -> Result<SBFunction> {
        self.add(&other.neg())
    }

    pub fn mul_pointwise(&self, other: &SBFunction) -> Result<SBFunction> {
        let (a, b) = self.common_refine(other)?;
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x.mul(y)).collect();
        SBFunction::new(a.grid, values)
    }

    pub fn neg(&self) -> SBFunction {
        SBFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(Value::neg).collect(),
        }
    }

    pub fn scale(&self, r: &Rat) -> SBFunction {
        SBFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.scale(r)).collect(),
        }
    }

    pub fn scale_value(&self, c: &Value) -> SBFunction {
        SBFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.mul(c)).collect(),
        }
    }

    pub fn conj(&self) -> SBFunction {
        SBFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(Value::conj).collect(),
        }
    }

    /// `x -> f(-x)`.
    pub fn reflect(&self) -> SBFunction {
        SBFunction::from_fn(&self.grid, |rep| {
            let neg: Vec<Rat> = rep.iter().map(|c| -c.clone()).collect();
            self.evaluate(&neg)
        })
        .expect("same grid")
    }

    /// `x -> f(x - b)`.
    pub fn translate(&self, b: &[Rat]) -> Result<SBFunction> {
        if b.len() != self.dim() {
            return Err(Error::invalid("translation vector has the wrong length"));
        }
        let vb = b.iter().filter_map(|c| vp_rat(c, self.p())).min();
        let s2 = match vb {
            Some(v) => self.support_exp().max(-v),
            None => self.support_exp(),
        };
        let g2 = CosetGrid::new(self.p(), self.dim(), self.resolution(), s2)?;
        SBFunction::from_fn(&g2, |rep| {
            let shifted: Vec<Rat> = rep.iter().zip(b).map(|(r, c)| r - c).collect();
            self.evaluate(&shifted)
        })
    }

    /// Exact integral: the sum of cell values times the cell volume.
    pub fn integrate(&self) -> Value {
        let mut acc = Value::zero();
        for v in &self.values {
            if !v.is_zero() {
                acc = acc.add(v);
            }
        }
        acc.scale(&self.grid.cell_volume())
    }

    /// `integral |f|^2`.
    pub fn l2_norm_sq(&self) -> Value {
        let mut acc = Value::zero();
        for v in &self.values {
            if !v.is_zero() {
                acc = acc.add(&v.mul(&v.conj()));
            }
        }
        acc.scale(&self.grid.cell_volume())
    }

    pub fn fourier(&self) -> Result<SBFunction> {
        self.fourier_signed(-1)
    }

    pub fn fourier_inv(&self) -> Result<SBFunction> {
        self.fourier_signed(1)
    }

    /// Factored transform: one 1-dimensional character sum per axis.  The
    /// output grid swaps (m, s); phases live in `mu_{p^{m+s}}`, so the
    /// exact track is closed under the whole computation.
    fn fourier_signed(&self, sign: i64) -> Result<SBFunction> {
        let (m, s) = (self.resolution(), self.support_exp());
        let out_grid = CosetGrid::new(self.p(), self.dim(), s, m)?;
        let pp = self.grid.axis_count().to_usize().ok_or(Error::CapExceeded {
            needed: self.grid.axis_count(),
            cap: CELL_CAP,
        })?;
        let order = (m + s) as u32;
        let n_order = self.p().checked_pow(order).ok_or(Error::CapExceeded {
            needed: u128::MAX,
            cap: CELL_CAP,
        })?;
        let roots: Vec<Value> = (0..pp)
            .map(|r| Value::Exact(Cyc::root_of_unity(n_order, sign * r as i64)))
            .collect();
        let weight = pow_rat(self.p(), -m);
        let len = self.values.len();
        let mut data = self.values.clone();
        for axis in 0..self.dim() {
            let stride = pp.pow((self.dim() - 1 - axis) as u32);
            let block = stride * pp;
            let mut out = vec![Value::zero(); len];
            let mut base_block = 0;
            while base_block < len {
                for off in 0..stride {
                    let base = base_block + off;
                    for ko in 0..pp {
                        let mut acc = Value::zero();
                        for ki in 0..pp {
                            let v = &data[base + ki * stride];
                            if v.is_zero() {
                                continue;
                            }
                            acc = acc.add(&v.mul(&roots[(ki * ko) % pp]));
                        }
                        out[base + ko * stride] = acc.scale(&weight);
                    }
                }
                base_block += block;
            }
            data = out;
        }
        SBFunction::new(out_grid, data)
    }

    /// `x -> f(Ax + b)` for invertible `A`.  The result is computed on a
    /// conservatively fine grid and then compacted.
    pub fn affine_pullback(&self, a: &QMat, b: &[Rat]) -> Result<SBFunction> {
        let n = self.dim();
        if a.rows() != n || a.cols() != n || b.len() != n {
            return Err(Error::invalid("affine map has the wrong shape"));
        }
        let p = self.p();
        let a_inv = a.inv()?;
        let va = a.min_valuation(p).ok_or_else(|| Error::invalid("zero matrix"))?;
        let vai = a_inv.min_valuation(p).ok_or_else(|| Error::invalid("zero matrix"))?;
        let vb = b.iter().filter_map(|c| vp_rat(c, p)).min();
        let bound = match vb {
            Some(v) => self.support_exp().max(-v),
            None => self.support_exp(),
        };
        let s2 = bound - vai;
        let m2 = (self.resolution() - va).max(-s2);
        let g2 = CosetGrid::new(p, n, m2, s2)?;
        let out = SBFunction::from_fn(&g2, |rep| {
            let mut y = a.mul_vec(rep);
            for (yi, bi) in y.iter_mut().zip(b) {
                *yi += bi;
            }
            self.evaluate(&y)
        })?;
        Ok(out.compact())
    }

    /// `(f * g)(z) = integral f(x) g(z - x) dx`.  Convolution smooths:
    /// the result is resolved at `min(m_f, m_g)` and supported in the
    /// larger of the two windows.
    pub fn convolve(&self, other: &SBFunction) -> Result<SBFunction> {
        if self.p() != other.p() || self.dim() != other.dim() {
            return Err(Error::invalid("functions live on different spaces"));
        }
        let fine_m = self.resolution().max(other.resolution());
        let fr = self.refine(fine_m, self.support_exp())?;
        let vol = fr.grid.cell_volume();
        let support: Vec<(Vec<Rat>, Value)> = fr
            .grid
            .iter()
            .filter(|&flat| !fr.values[flat as usize].is_zero())
            .map(|flat| (fr.grid.rep(flat), fr.values[flat as usize].clone()))
            .collect();
        let out_grid = CosetGrid::new(
            self.p(),
            self.dim(),
            self.resolution().min(other.resolution()),
            self.support_exp().max(other.support_exp()),
        )?;
        SBFunction::from_fn(&out_grid, |z| {
            let mut acc = Value::zero();
            for (x, v) in &support {
                let diff: Vec<Rat> = z.iter().zip(x).map(|(zi, xi)| zi - xi).collect();
                let g = other.evaluate(&diff);
                if !g.is_zero() {
                    acc = acc.add(&v.mul(&g));
                }
            }
            acc.scale(&vol)
        })
    }

    /// Tensor product: `(f ox g)(x, y) = f(x) g(y)` on the concatenated
    /// axes (both factors re-expressed on a common (m, s)).
    pub fn tensor(&self, other: &SBFunction) -> Result<SBFunction> {
        if self.p() != other.p() {
            return Err(Error::invalid("tensor factors have different p"));
        }
        let m = self.resolution().max(other.resolution());
        let s = self.support_exp().max(other.support_exp());
        let a = self.refine(m, s)?;
        let b = other.refine(m, s)?;
        let grid = CosetGrid::new(self.p(), a.dim() + b.dim(), m, s)?;
        grid.check_cap(CELL_CAP)?;
        let len_b = b.values.len();
        let mut values = Vec::with_capacity(a.values.len() * len_b);
        for va in &a.values {
            for vb in &b.values {
                values.push(va.mul(vb));
            }
        }
        SBFunction::new(grid, values)
    }

    /// The double integral of `phi(x, y)` over `F^n x F^n`, computed via
    /// spherical coordinates in the first factor: decompose `x = a xbar`
    /// with `xbar` on the unit sphere and `a` running over `F^x`, then sum
    /// shells `|a| = q^{-t}`.  From the shell where `a xbar` falls inside
    /// the deepest resolved cell onward, consecutive shell sums agree up
    /// to the exact factor `q^{-n}`, and the geometric tail is closed in
    /// exact arithmetic (three agreeing probes are required; persistent
    /// disagreement is reported as a stabilization failure).
    ///
    /// This must agree with [`SBFunction::integrate`] — the comparison is
    /// a core consistency check on the sphere decomposition.
    pub fn spherical_integrate(&self) -> Result<Value> {
        let n2 = self.dim();
        if n2 % 2 != 0 {
            return Err(Error::invalid("spherical form needs an even-dimensional domain"));
        }
        let n = n2 / 2;
        let p = self.p();
        let (m, s) = (self.resolution(), self.support_exp());
        let q_unit = Rat::one() - pow_rat(p, -1);

        let m_sphere = (m + s).max(1);
        let sc = sphere_facets(p, n, m_sphere, CELL_CAP)?;
        let w_dom = sc.domain_cell_weight();

        let y_grid = CosetGrid::new(p, n, m, s)?;
        let y_cells: Vec<Vec<Rat>> = y_grid.iter().map(|f| y_grid.rep(f)).collect();
        let vol_y = y_grid.cell_volume();

        // sum_y phi(a.xbar, y) vol_y for a fixed scalar a
        let inner_sum = |a: &Rat, xbar: &[Rat]| -> Value {
            let point: Vec<Rat> = xbar.iter().map(|c| a * c).collect();
            let mut acc = Value::zero();
            for y in &y_cells {
                let mut full = point.clone();
                full.extend_from_slice(y);
                let v = self.evaluate(&full);
                if !v.is_zero() {
                    acc = acc.add(&v);
                }
            }
            acc.scale(&vol_y)
        };

        let mut total = Value::zero();
        for &(_, flat) in &sc.domain {
            let xbar = sc.grid.rep(flat);
            let mut dom_acc = Value::zero();
            // explicit shells |a| = q^{-t} below the stable range; the
            // integrand needs a resolved modulo p^{m-t}, so each shell
            // splits into unit classes of multiplicative measure q^{-j}
            for t in -s..m {
                let j = (m - t) as u32;
                let shell_weight = pow_rat(p, -(t * n as i64));
                let pj = p.pow(j);
                let class_meas = pow_rat(p, -(j as i64));
                for u in 1..pj {
                    if u % p == 0 {
                        continue;
                    }
                    let a = pow_rat(p, t) * Rat::from_integer(u.into());
                    let v = inner_sum(&a, &xbar);
                    dom_acc = dom_acc.add(&v.scale(&(shell_weight.clone() * class_meas.clone())));
                }
            }
            // closed geometric tail over t >= m, with stabilization probes
            let t0 = m;
            let c0 = inner_sum(&pow_rat(p, t0), &xbar);
            let c1 = inner_sum(&pow_rat(p, t0 + 1), &xbar);
            let c2 = inner_sum(&pow_rat(p, t0 + 2), &xbar);
            if !c0.eq_tol(&c1) || !c1.eq_tol(&c2) {
                return Err(Error::NotStabilized { max_shell: t0 + 2 });
            }
            let tail_weight = q_unit.clone() * pow_rat(p, -(t0 * n as i64))
                / (Rat::one() - pow_rat(p, -(n as i64)));
            dom_acc = dom_acc.add(&c0.scale(&tail_weight));
            total = total.add(&dom_acc.scale(&w_dom));
        }
        Ok(total)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let p = self.p();
        let prec = ((self.resolution() + self.support_exp()).max(1)) as usize;
        let mut entries = Vec::new();
        for flat in self.grid.iter() {
            let v = &self.values[flat as usize];
            if v.is_zero() {
                continue;
            }
            let rep: Vec<String> = self
                .grid
                .rep(flat)
                .iter()
                .map(|c| PadicScalar::from_rational(p, c, prec).to_string())
                .collect();
            let entry = match v {
                Value::Exact(c) => match exact_entry(p, c) {
                    Some((phase, magq, rat)) => serde_json::json!({
                        "rep": rep, "phase": phase, "magq": magq, "rat": rat,
                    }),
                    None => {
                        let z = v.approx();
                        serde_json::json!({ "rep": rep, "re": z.re, "im": z.im })
                    }
                },
                Value::Approx(z) => serde_json::json!({ "rep": rep, "re": z.re, "im": z.im }),
            };
            entries.push(entry);
        }
        serde_json::json!({
            "p": p,
            "n": self.dim(),
            "m": self.resolution(),
            "s": self.support_exp(),
            "entries": entries,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<SBFunction> {
        let obj = v.as_object().ok_or_else(|| Error::invalid("expected a JSON object"))?;
        let get_i64 = |k: &str| -> Result<i64> {
            obj.get(k)
                .and_then(|x| x.as_i64())
                .ok_or_else(|| Error::invalid(format!("missing integer field `{k}`")))
        };
        let p = get_i64("p")? as u64;
        let n = get_i64("n")? as usize;
        let grid = CosetGrid::new(p, n, get_i64("m")?, get_i64("s")?)?;
        grid.check_cap(CELL_CAP)?;
        let mut values = vec![Value::zero(); grid.len() as usize];
        let entries = obj
            .get("entries")
            .and_then(|x| x.as_array())
            .ok_or_else(|| Error::invalid("missing `entries` array"))?;
        for e in entries {
            let rep_strs = e
                .get("rep")
                .and_then(|x| x.as_array())
                .ok_or_else(|| Error::invalid("entry without `rep`"))?;
            let mut rep = Vec::with_capacity(rep_strs.len());
            for s in rep_strs {
                let s = s.as_str().ok_or_else(|| Error::invalid("rep coordinates are strings"))?;
                rep.push(parse_scalar(s, p)?.as_rat());
            }
            let flat = grid
                .locate(&rep)
                .ok_or_else(|| Error::OffDomain("entry representative outside the grid".into()))?;
            let value = if let Some(re) = e.get("re") {
                let re = re.as_f64().ok_or_else(|| Error::invalid("re must be a float"))?;
                let im = e
                    .get("im")
                    .and_then(|x| x.as_f64())
                    .ok_or_else(|| Error::invalid("im must be a float"))?;
                Value::Approx(num_complex::Complex64::new(re, im))
            } else {
                parse_exact_entry(p, e)?
            };
            values[flat as usize] = value;
        }
        SBFunction::new(grid, values)
    }
}

/// Try to express an exact value as `rat * q^{magq} * zeta`, with the
/// root of unity of p-power order and `rat` a unit at p.  Returns the
/// (phase, magq, rat) strings of the file format.
fn exact_entry(p: u64, c: &Cyc) -> Option<(String, String, String)> {
    for half in 0..2i64 {
        let w = if half == 0 {
            c.clone()
        } else {
            c.mul(&Cyc::q_half_pow(p, -1))
        };
        let Some((coef, order, e)) = w.monomial_decompose() else {
            continue;
        };
        if coef.is_zero() {
            return None; // zeros are skipped upstream
        }
        if order != 1 && !is_power_of(order, p) {
            continue;
        }
        let a = vp_rat(&coef, p).expect("nonzero");
        let unit = coef * pow_rat(p, -a);
        let magq = Rat::new((2 * a + half).into(), 2.into());
        let phase = if e == 0 {
            "0".to_string()
        } else {
            format!("{e}/{order}")
        };
        return Some((phase, format_rat(&magq), format_rat(&unit)));
    }
    None
}

fn parse_exact_entry(p: u64, e: &serde_json::Value) -> Result<Value> {
    let field = |k: &str| -> Result<&str> {
        e.get(k)
            .and_then(|x| x.as_str())
            .ok_or_else(|| Error::invalid(format!("exact entry needs string field `{k}`")))
    };
    let rat_part = parse_rat(field("rat")?)?;
    let magq = parse_rat(field("magq")?)?;
    let h2 = magq * Rat::from_integer(2.into());
    if !h2.is_integer() {
        return Err(Error::invalid("magq must be a half-integer"));
    }
    let h = h2.to_integer().to_i64().ok_or_else(|| Error::invalid("magq out of range"))?;
    let phase_str = field("phase")?;
    let mut c = Cyc::from_rat(rat_part).mul(&Cyc::q_half_pow(p, h));
    if phase_str != "0" {
        let (num, den) = phase_str
            .split_once('/')
            .ok_or_else(|| Error::invalid("phase must be `a/p^k` or `0`"))?;
        let num: i64 = num.parse().map_err(|_| Error::invalid("bad phase numerator"))?;
        let den: u64 = den.parse().map_err(|_| Error::invalid("bad phase denominator"))?;
        if den != 1 && !is_power_of(den, p) {
            return Err(Error::invalid("phase denominator must be a power of p"));
        }
        c = c.mul(&Cyc::root_of_unity(den, num));
    }
    Ok(Value::Exact(c))
}

fn is_power_of(mut n: u64, p: u64) -> bool {
    if n == 0 {
        return false;
    }
    while n % p == 0 {
        n /= p;
    }
    n == 1
}

/// Brute-force transform straight from the definition; the test oracle
/// for the factored pass.
#[cfg(test)]
fn fourier_brute(f: &SBFunction, sign: i64) -> SBFunction {
    let g = f.grid().clone();
    let d = g.dual();
    let vol = g.cell_volume();
    SBFunction::from_fn(&d, |xi| {
        let flat_xi = d.locate(xi).unwrap();
        let mut acc = Value::zero();
        for fx in g.iter() {
            let v = f.value(fx);
            if v.is_zero() {
                continue;
            }
            let mut ph = g.pairing_phase(fx, &d, flat_xi);
            if sign < 0 {
                ph = ph.neg();
            }
            acc = acc.add(&v.mul(&Value::Exact(ph.to_cyc())));
        }
        acc.scale(&vol)
    })
    .unwrap()
}

#[cfg(test)]
pub(crate) fn assert_fn_eq(a: &SBFunction, b: &SBFunction, what: &str) {
    let (ra, rb) = a.common_refine(b).unwrap();
    for flat in ra.grid().iter() {
        assert!(
            ra.value(flat).eq_tol(rb.value(flat)),
            "{what}: cell {flat} differs: {:?} vs {:?}",
            ra.value(flat),
            rb.value(flat)
        );
    }
}
