//! Built-in IMEX Runge-Kutta tableau pairs.
//!
//! Each method couples a diagonally implicit (DIRK) part `a_im` with an
//! explicit part `a_ex` on shared abscissae `c`, with `c[0] = 0` and an
//! explicit first stage (`a_im[0][0] = 0`). Coefficients are stored as exact
//! integer ratios and lowered to the working precision on demand, so the
//! `f64` and double-double paths see the same rounded-once values and
//! structural zero tests are exact.
//!
//! [`ImexTableau::validate_structure`] checks the defining identities (row
//! sums against `c`, weight sums, abscissa endpoints, declared property
//! flags) and reports residuals; the flags themselves are data, validated
//! one-directionally (a declared flag must hold numerically, while an
//! undeclared one simply isn't asserted).

use crate::error::{Error, Result};
use crate::ratio::Ratio;
use crate::scalar::Real;

/// Identifier for a built-in IMEX Runge-Kutta pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TableauId {
    /// First-order IMEX Euler (two stages, explicit first).
    Euler,
    /// Second-order implicit/explicit trapezoidal pair.
    Tr,
    /// Second-order three-stage pair with shared weights.
    Cb2,
    /// Third-order four-stage pair (c-variant).
    Cb3c,
    /// Third-order four-stage pair (e-variant).
    Cb3e,
    /// Fourth-order six-stage pair with second-order DIRK stages.
    Cb4,
    /// Third-order five-stage pair with padded explicit first column.
    Ars3,
}

impl TableauId {
    pub const ALL: [TableauId; 7] = [
        TableauId::Euler,
        TableauId::Tr,
        TableauId::Cb2,
        TableauId::Cb3c,
        TableauId::Cb3e,
        TableauId::Cb4,
        TableauId::Ars3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableauId::Euler => "IMEX-Euler",
            TableauId::Tr => "RK-TR",
            TableauId::Cb2 => "RK-CB2",
            TableauId::Cb3c => "RK-CB3c",
            TableauId::Cb3e => "RK-CB3e",
            TableauId::Cb4 => "RK-CB4",
            TableauId::Ars3 => "RK-ARS3",
        }
    }

    /// Compact name used inside composite method labels.
    pub fn short_name(self) -> &'static str {
        match self {
            TableauId::Euler => "Eu",
            TableauId::Tr => "TR",
            TableauId::Cb2 => "CB2",
            TableauId::Cb3c => "CB3c",
            TableauId::Cb3e => "CB3e",
            TableauId::Cb4 => "CB4",
            TableauId::Ars3 => "ARS3",
        }
    }

    /// Parses a compact name (case-insensitive).
    pub fn from_short_name(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        for id in Self::ALL {
            if id.short_name().to_ascii_lowercase() == lower {
                return Ok(id);
            }
        }
        Err(Error::UnknownMethod {
            name: name.to_string(),
            valid: Self::ALL
                .iter()
                .map(|id| id.short_name())
                .collect::<Vec<_>>()
                .join(", "),
        })
    }

    /// Parses a method name (case-insensitive).
    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        for id in Self::ALL {
            if id.name().to_ascii_lowercase() == lower {
                return Ok(id);
            }
        }
        Err(Error::UnknownMethod {
            name: name.to_string(),
            valid: Self::ALL
                .iter()
                .map(|id| id.name())
                .collect::<Vec<_>>()
                .join(", "),
        })
    }
}

/// Exact rational source tables (ragged lower-triangular rows).
#[derive(Clone, Copy, Debug)]
pub struct RationalTables {
    pub c: &'static [Ratio],
    /// Row `i` holds columns `0..=i` (diagonal included).
    pub a_im: &'static [&'static [Ratio]],
    /// Row `i` holds columns `0..=i`; the diagonal entry is always zero.
    pub a_ex: &'static [&'static [Ratio]],
    pub b_im: &'static [Ratio],
    pub b_ex: &'static [Ratio],
}

impl RationalTables {
    #[inline]
    fn entry(rows: &[&[Ratio]], i: usize, j: usize) -> Ratio {
        rows[i].get(j).copied().unwrap_or(Ratio::ZERO)
    }

    pub fn a_im(&self, i: usize, j: usize) -> Ratio {
        Self::entry(self.a_im, i, j)
    }

    pub fn a_ex(&self, i: usize, j: usize) -> Ratio {
        Self::entry(self.a_ex, i, j)
    }
}

/// Tableau coefficients lowered to precision `R` (full `s x s` matrices).
#[derive(Clone, Debug)]
pub struct Coeffs<R: Real> {
    pub s: usize,
    pub c: Vec<R>,
    pub a_im: Vec<Vec<R>>,
    pub a_ex: Vec<Vec<R>>,
    pub b_im: Vec<R>,
    pub b_ex: Vec<R>,
}

/// An IMEX Runge-Kutta pair: DIRK + explicit tableaux on shared abscissae.
#[derive(Clone, Debug)]
pub struct ImexTableau {
    pub id: TableauId,
    pub name: &'static str,
    /// Stage count.
    pub s: usize,
    /// Classical order of the pair.
    pub declared_order: usize,
    /// Declared property: `b_im` equals the last implicit stage row.
    pub stiffly_accurate: bool,
    /// Declared property: `b_ex` equals the last explicit stage row.
    pub fsal: bool,
    /// Declared property: the implicit and explicit weights coincide.
    pub shared_b: bool,
    /// Abscissae in `f64` (rounded once from the exact ratios).
    pub c: Vec<f64>,
    pub a_im: Vec<Vec<f64>>,
    pub a_ex: Vec<Vec<f64>>,
    pub b_im: Vec<f64>,
    pub b_ex: Vec<f64>,
    exact: RationalTables,
}

/// Structural validation result with per-identity residuals.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub name: &'static str,
    /// `max_i |sum_j a_im[i][j] - c[i]|`.
    pub row_sum_im: f64,
    /// `max_i |sum_j a_ex[i][j] - c[i]|`.
    pub row_sum_ex: f64,
    /// `|sum_j b_im[j] - 1|`.
    pub b_sum_im: f64,
    /// `|sum_j b_ex[j] - 1|`.
    pub b_sum_ex: f64,
    /// `|c[0]|`.
    pub c_first: f64,
    /// `|c[s-1] - 1|`.
    pub c_last: f64,
    /// `|a_im[0][0]|` — the first stage must be explicit.
    pub first_stage_implicit_weight: f64,
    /// Largest upper-triangular magnitude (strictly upper for `a_im`,
    /// diagonal included for `a_ex`).
    pub triangularity: f64,
    /// `max_j |b_im[j] - a_im[s-1][j]|` (informational unless declared).
    pub sa_identity: f64,
    /// `max_j |b_ex[j] - a_ex[s-1][j]|` (informational unless declared).
    pub fsal_identity: f64,
    /// `max_j |b_im[j] - b_ex[j]|` (informational unless declared).
    pub shared_b_identity: f64,
    /// Max over all unconditional residuals plus declared-flag identities.
    pub max_residual: f64,
    /// Declared flags whose identity residual exceeds the tolerance.
    pub flag_conflicts: Vec<String>,
}

/// Tolerance on every structural identity a tableau must satisfy.
pub const STRUCTURE_TOL: f64 = 1e-14;

impl ImexTableau {
    /// Exact rational view of the coefficients.
    pub fn exact(&self) -> &RationalTables {
        &self.exact
    }

    /// Globally stiffly accurate: the update equals the last stage exactly.
    pub fn gsa(&self) -> bool {
        self.stiffly_accurate && self.fsal
    }

    /// Lowers the exact coefficients to precision `R` as dense matrices.
    pub fn coeffs_in<R: Real>(&self) -> Coeffs<R> {
        let s = self.s;
        let lower = |r: Ratio| R::from_ratio(r.numerator(), r.denominator());
        let dense = |rows: &[&[Ratio]]| -> Vec<Vec<R>> {
            (0..s)
                .map(|i| {
                    (0..s)
                        .map(|j| lower(RationalTables::entry(rows, i, j)))
                        .collect()
                })
                .collect()
        };
        Coeffs {
            s,
            c: self.exact.c.iter().map(|&r| lower(r)).collect(),
            a_im: dense(self.exact.a_im),
            a_ex: dense(self.exact.a_ex),
            b_im: self.exact.b_im.iter().map(|&r| lower(r)).collect(),
            b_ex: self.exact.b_ex.iter().map(|&r| lower(r)).collect(),
        }
    }

    /// True when the assembly factor `b_im[j] - a_im[s-1][j]` is exactly zero
    /// (literal rational identity; conservative for differently written but
    /// equal ratios, which only costs a skipped optimization).
    pub fn assembly_factor_zero_im(&self, j: usize) -> bool {
        self.exact.b_im[j] == self.exact.a_im(self.s - 1, j)
    }

    /// True when the assembly factor `b_ex[j] - a_ex[s-1][j]` is exactly zero.
    pub fn assembly_factor_zero_ex(&self, j: usize) -> bool {
        self.exact.b_ex[j] == self.exact.a_ex(self.s - 1, j)
    }

    /// Checks the defining structural identities and declared flags.
    pub fn validate_structure(&self) -> ValidationReport {
        let s = self.s;
        let row_residual = |a: &[Vec<f64>]| -> f64 {
            (0..s)
                .map(|i| (a[i].iter().sum::<f64>() - self.c[i]).abs())
                .fold(0.0, f64::max)
        };
        let row_sum_im = row_residual(&self.a_im);
        let row_sum_ex = row_residual(&self.a_ex);
        let b_sum_im = (self.b_im.iter().sum::<f64>() - 1.0).abs();
        let b_sum_ex = (self.b_ex.iter().sum::<f64>() - 1.0).abs();
        let c_first = self.c[0].abs();
        let c_last = (self.c[s - 1] - 1.0).abs();
        let first_stage_implicit_weight = self.a_im[0][0].abs();

        let mut triangularity = 0.0f64;
        for i in 0..s {
            for j in 0..s {
                let strict_upper = j > i;
                if strict_upper {
                    triangularity = triangularity.max(self.a_im[i][j].abs());
                }
                if j >= i {
                    triangularity = triangularity.max(self.a_ex[i][j].abs());
                }
            }
        }

        let max_pair = |x: &[f64], y: &[f64]| -> f64 {
            x.iter()
                .zip(y)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let sa_identity = max_pair(&self.b_im, &self.a_im[s - 1]);
        let fsal_identity = max_pair(&self.b_ex, &self.a_ex[s - 1]);
        let shared_b_identity = max_pair(&self.b_im, &self.b_ex);

        let mut max_residual = [
            row_sum_im,
            row_sum_ex,
            b_sum_im,
            b_sum_ex,
            c_first,
            c_last,
            first_stage_implicit_weight,
            triangularity,
        ]
        .into_iter()
        .fold(0.0, f64::max);

        let mut flag_conflicts = Vec::new();
        let mut check_flag = |declared: bool, residual: f64, what: &str| {
            if declared {
                max_residual = max_residual.max(residual);
                if residual > STRUCTURE_TOL {
                    flag_conflicts.push(format!(
                        "{what} declared but identity residual is {residual:.3e}"
                    ));
                }
            }
        };
        check_flag(self.stiffly_accurate, sa_identity, "stiffly-accurate");
        check_flag(self.fsal, fsal_identity, "FSAL");
        check_flag(self.shared_b, shared_b_identity, "shared-weights");

        ValidationReport {
            name: self.name,
            row_sum_im,
            row_sum_ex,
            b_sum_im,
            b_sum_ex,
            c_first,
            c_last,
            first_stage_implicit_weight,
            triangularity,
            sa_identity,
            fsal_identity,
            shared_b_identity,
            max_residual,
            flag_conflicts,
        }
    }

    /// Max residual of the DIRK stage-order-2 condition
    /// `sum_j a_im[i][j] c[j] = c[i]^2 / 2` over stages `i >= 1`.
    pub fn dirk_stage_order2_residual(&self) -> f64 {
        (1..self.s)
            .map(|i| {
                let lhs: f64 = (0..=i).map(|j| self.a_im[i][j] * self.c[j]).sum();
                (lhs - 0.5 * self.c[i] * self.c[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// CSV dump: one labeled row per coefficient vector / matrix row,
    /// 17 significant digits.
    pub fn dump_csv(&self) -> String {
        let mut out = String::new();
        let row = |label: String, values: &[f64]| {
            let mut line = label;
            for v in values {
                line.push_str(&format!(",{v:.16e}"));
            }
            line.push('\n');
            line
        };
        out.push_str(&row("c".to_string(), &self.c));
        for i in 0..self.s {
            out.push_str(&row(format!("a_im[{i}]"), &self.a_im[i]));
        }
        for i in 0..self.s {
            out.push_str(&row(format!("a_ex[{i}]"), &self.a_ex[i]));
        }
        out.push_str(&row("b_im".to_string(), &self.b_im));
        out.push_str(&row("b_ex".to_string(), &self.b_ex));
        out
    }
}

const fn r(num: i128, den: i128) -> Ratio {
    Ratio::new(num, den)
}

const Z: Ratio = Ratio::ZERO;

mod tables {
    use super::*;

    pub static EULER: RationalTables = RationalTables {
        c: &[Z, r(1, 1)],
        a_im: &[&[Z], &[Z, r(1, 1)]],
        a_ex: &[&[Z], &[r(1, 1), Z]],
        b_im: &[Z, r(1, 1)],
        b_ex: &[r(1, 1), Z],
    };

    pub static TR: RationalTables = RationalTables {
        c: &[Z, r(1, 1), r(1, 1)],
        a_im: &[&[Z], &[Z, r(1, 1)], &[r(1, 2), Z, r(1, 2)]],
        a_ex: &[&[Z], &[r(1, 1), Z], &[r(1, 2), r(1, 2), Z]],
        b_im: &[r(1, 2), Z, r(1, 2)],
        b_ex: &[r(1, 2), r(1, 2), Z],
    };

    pub static CB2: RationalTables = RationalTables {
        c: &[Z, r(2, 5), r(1, 1)],
        a_im: &[&[Z], &[Z, r(2, 5)], &[Z, r(5, 6), r(1, 6)]],
        a_ex: &[&[Z], &[r(2, 5), Z], &[Z, r(1, 1), Z]],
        b_im: &[Z, r(5, 6), r(1, 6)],
        b_ex: &[Z, r(5, 6), r(1, 6)],
    };

    pub static CB3C: RationalTables = RationalTables {
        c: &[
            Z,
            r(3375509829940, 4525919076317),
            r(272778623835, 1039454778728),
            r(1, 1),
        ],
        a_im: &[
            &[Z],
            &[Z, r(3375509829940, 4525919076317)],
            &[
                Z,
                r(
                    -11_712_383_888_607_531_889_907,
                    32_694_570_495_602_105_556_248,
                ),
                r(566138307881, 912153721139),
            ],
            &[
                Z,
                r(673488652607, 2334033219546),
                r(493801219040, 853653026979),
                r(184814777513, 1389668723319),
            ],
        ],
        a_ex: &[
            &[Z],
            &[r(3375509829940, 4525919076317), Z],
            &[Z, r(272778623835, 1039454778728), Z],
            &[
                Z,
                r(673488652607, 2334033219546),
                r(1660544566939, 2334033219546),
                Z,
            ],
        ],
        b_im: &[
            Z,
            r(673488652607, 2334033219546),
            r(493801219040, 853653026979),
            r(184814777513, 1389668723319),
        ],
        b_ex: &[
            Z,
            r(673488652607, 2334033219546),
            r(493801219040, 853653026979),
            r(184814777513, 1389668723319),
        ],
    };

    pub static CB3E: RationalTables = RationalTables {
        c: &[Z, r(1, 3), r(1, 1), r(1, 1)],
        a_im: &[
            &[Z],
            &[Z, r(1, 3)],
            &[Z, r(1, 2), r(1, 2)],
            &[Z, r(3, 4), r(-1, 4), r(1, 2)],
        ],
        a_ex: &[
            &[Z],
            &[r(1, 3), Z],
            &[Z, r(1, 1), Z],
            &[Z, r(3, 4), r(1, 4), Z],
        ],
        b_im: &[Z, r(3, 4), r(-1, 4), r(1, 2)],
        b_ex: &[Z, r(3, 4), r(-1, 4), r(1, 2)],
    };

    pub static CB4: RationalTables = RationalTables {
        c: &[Z, r(1, 4), r(3, 4), r(3, 8), r(1, 2), r(1, 1)],
        a_im: &[
            &[Z],
            &[r(1, 8), r(1, 8)],
            &[
                r(216145252607, 961230882893),
                r(257479850128, 1143310606989),
                r(30481561667, 101628412017),
            ],
            &[
                r(232049084587, 1377130630063),
                r(-381180097479, 1276440792700),
                r(-54660926949, 461115766612),
                r(344309628413, 552073727558),
            ],
            &[
                r(232049084587, 1377130630063),
                r(322009889509, 2243393849156),
                r(-100836174740, 861952129159),
                r(-250423827953, 1283875864443),
                r(1, 2),
            ],
            &[
                r(232049084587, 1377130630063),
                r(322009889509, 2243393849156),
                r(-195109672787, 1233165545817),
                r(-340582416761, 705418832319),
                r(463396075661, 409972144477),
                r(323177943294, 1626646580633),
            ],
        ],
        a_ex: &[
            &[Z],
            &[r(1, 4), Z],
            &[
                r(153985248130, 1004999853329),
                r(902825336800, 1512825644809),
                Z,
            ],
            &[
                r(232049084587, 1377130630063),
                r(99316866929, 820744730663),
                r(82888780751, 969573940619),
                Z,
            ],
            &[
                r(232049084587, 1377130630063),
                r(322009889509, 2243393849156),
                r(57501241309, 765040883867),
                r(76345938311, 676824576433),
                Z,
            ],
            &[
                r(232049084587, 1377130630063),
                r(322009889509, 2243393849156),
                r(-195109672787, 1233165545817),
                r(-4099309936455, 6310162971841),
                r(1395992540491, 933264948679),
                Z,
            ],
        ],
        b_im: &[
            r(232049084587, 1377130630063),
            r(322009889509, 2243393849156),
            r(-195109672787, 1233165545817),
            r(-340582416761, 705418832319),
            r(463396075661, 409972144477),
            r(323177943294, 1626646580633),
        ],
        b_ex: &[
            r(232049084587, 1377130630063),
            r(322009889509, 2243393849156),
            r(-195109672787, 1233165545817),
            r(-340582416761, 705418832319),
            r(463396075661, 409972144477),
            r(323177943294, 1626646580633),
        ],
    };

    pub static ARS3: RationalTables = RationalTables {
        c: &[Z, r(1, 2), r(2, 3), r(1, 2), r(1, 1)],
        a_im: &[
            &[Z],
            &[Z, r(1, 2)],
            &[Z, r(1, 6), r(1, 2)],
            &[Z, r(-1, 2), r(1, 2), r(1, 2)],
            &[Z, r(3, 2), r(-3, 2), r(1, 2), r(1, 2)],
        ],
        a_ex: &[
            &[Z],
            &[r(1, 2), Z],
            &[r(11, 18), r(1, 18), Z],
            &[r(5, 6), r(-5, 6), r(1, 2), Z],
            &[r(1, 4), r(7, 4), r(3, 4), r(-7, 4), Z],
        ],
        b_im: &[Z, r(3, 2), r(-3, 2), r(1, 2), r(1, 2)],
        b_ex: &[r(1, 4), r(7, 4), r(3, 4), r(-7, 4), Z],
    };
}

/// Returns a built-in tableau by identifier.
pub fn builtin_tableau(id: TableauId) -> ImexTableau {
    let (exact, declared_order, stiffly_accurate, fsal, shared_b) = match id {
        TableauId::Euler => (&tables::EULER, 1, true, true, false),
        TableauId::Tr => (&tables::TR, 2, true, true, false),
        TableauId::Cb2 => (&tables::CB2, 2, true, false, true),
        TableauId::Cb3c => (&tables::CB3C, 3, false, false, true),
        TableauId::Cb3e => (&tables::CB3E, 3, true, false, true),
        TableauId::Cb4 => (&tables::CB4, 4, true, false, true),
        TableauId::Ars3 => (&tables::ARS3, 3, true, true, false),
    };
    let exact = *exact;
    let s = exact.c.len();
    let lower = |rat: Ratio| <f64 as Real>::from_ratio(rat.numerator(), rat.denominator());
    let dense = |rows: &[&[Ratio]]| -> Vec<Vec<f64>> {
        (0..s)
            .map(|i| {
                (0..s)
                    .map(|j| lower(RationalTables::entry(rows, i, j)))
                    .collect()
            })
            .collect()
    };
    ImexTableau {
        id,
        name: id.name(),
        s,
        declared_order,
        stiffly_accurate,
        fsal,
        shared_b,
        c: exact.c.iter().map(|&rat| lower(rat)).collect(),
        a_im: dense(exact.a_im),
        a_ex: dense(exact.a_ex),
        b_im: exact.b_im.iter().map(|&rat| lower(rat)).collect(),
        b_ex: exact.b_ex.iter().map(|&rat| lower(rat)).collect(),
        exact,
    }
}

/// Returns a built-in tableau by method name.
pub fn tableau_by_name(name: &str) -> Result<ImexTableau> {
    TableauId::from_name(name).map(builtin_tableau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::Dd;
    use proptest::prelude::*;

    #[test]
    fn all_builtins_validate_clean() {
        for id in TableauId::ALL {
            let t = builtin_tableau(id);
            let report = t.validate_structure();
            assert!(
                report.max_residual <= STRUCTURE_TOL,
                "{}: max residual {:.3e}",
                t.name,
                report.max_residual
            );
            assert!(
                report.flag_conflicts.is_empty(),
                "{}: {:?}",
                t.name,
                report.flag_conflicts
            );
        }
    }

    #[test]
    fn declared_flags_pin_expected_values() {
        let expect = [
            (TableauId::Euler, 2, 1, true, true, false),
            (TableauId::Tr, 3, 2, true, true, false),
            (TableauId::Cb2, 3, 2, true, false, true),
            (TableauId::Cb3c, 4, 3, false, false, true),
            (TableauId::Cb3e, 4, 3, true, false, true),
            (TableauId::Cb4, 6, 4, true, false, true),
            (TableauId::Ars3, 5, 3, true, true, false),
        ];
        for (id, s, order, sa, fsal, shared) in expect {
            let t = builtin_tableau(id);
            assert_eq!(t.s, s, "{}", t.name);
            assert_eq!(t.declared_order, order, "{}", t.name);
            assert_eq!(t.stiffly_accurate, sa, "{}", t.name);
            assert_eq!(t.fsal, fsal, "{}", t.name);
            assert_eq!(t.shared_b, shared, "{}", t.name);
            assert_eq!(t.gsa(), sa && fsal, "{}", t.name);
        }
    }

    #[test]
    fn cb3c_final_explicit_row_sums_to_one_exactly() {
        // The two nonzero entries share a denominator and their numerators
        // add to it, so the identity is exact in integers.
        assert_eq!(673488652607i128 + 1660544566939, 2334033219546);
        let t = builtin_tableau(TableauId::Cb3c);
        // Undeclared-but-true identity: the implicit weights match the last
        // implicit row even though the stiffly-accurate flag is off.
        assert!(t.validate_structure().sa_identity == 0.0);
        assert!(!t.stiffly_accurate);
    }

    #[test]
    fn cb4_dirk_stages_have_order_two() {
        let t = builtin_tableau(TableauId::Cb4);
        assert!(
            t.dirk_stage_order2_residual() <= 1e-13,
            "residual {:.3e}",
            t.dirk_stage_order2_residual()
        );
    }

    #[test]
    fn gsa_assembly_factors_vanish_exactly() {
        for id in [TableauId::Euler, TableauId::Tr, TableauId::Ars3] {
            let t = builtin_tableau(id);
            for j in 0..t.s {
                assert!(t.assembly_factor_zero_im(j), "{} im {j}", t.name);
                assert!(t.assembly_factor_zero_ex(j), "{} ex {j}", t.name);
            }
        }
        // Non-FSAL schemes must keep at least one nonzero explicit factor.
        let t = builtin_tableau(TableauId::Cb2);
        assert!((0..t.s).any(|j| !t.assembly_factor_zero_ex(j)));
    }

    #[test]
    fn dd_coefficients_round_to_f64_values() {
        for id in TableauId::ALL {
            let t = builtin_tableau(id);
            let dd = t.coeffs_in::<Dd>();
            for i in 0..t.s {
                assert_eq!(dd.c[i].to_f64(), t.c[i]);
                for j in 0..t.s {
                    assert_eq!(dd.a_im[i][j].to_f64(), t.a_im[i][j]);
                    assert_eq!(dd.a_ex[i][j].to_f64(), t.a_ex[i][j]);
                }
            }
        }
    }

    #[test]
    fn unknown_name_lists_valid_methods() {
        let err = tableau_by_name("RK-XYZ").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("RK-CB3e"), "{msg}");
    }

    #[test]
    fn dump_csv_shape() {
        let t = builtin_tableau(TableauId::Tr);
        let dump = t.dump_csv();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * t.s + 2);
        assert!(lines[0].starts_with("c,"));
        assert!(lines[1].starts_with("a_im[0],"));
        assert_eq!(lines[0].split(',').count(), t.s + 1);
    }

    proptest! {
        #[test]
        fn perturbations_are_detected(
            which in 0usize..7,
            slot in 0usize..4,
            i in 0usize..6,
            j in 0usize..6,
            delta in 1e-8f64..1e-3,
            negate in proptest::bool::ANY,
        ) {
            let id = TableauId::ALL[which];
            let mut t = builtin_tableau(id);
            let s = t.s;
            let d = if negate { -delta } else { delta };
            // Perturb a structurally meaningful position.
            match slot {
                0 => {
                    let i = i % s;
                    let j = j % (i + 1);
                    t.a_im[i][j] += d;
                }
                1 => {
                    let i = 1 + i % (s - 1);
                    let j = j % i;
                    t.a_ex[i][j] += d;
                }
                2 => t.b_im[j % s] += d,
                _ => t.c[j % s] += d,
            }
            let report = t.validate_structure();
            prop_assert!(
                report.max_residual > STRUCTURE_TOL,
                "{}: perturbation {d:e} not detected (max residual {:.3e})",
                t.name,
                report.max_residual
            );
        }
    }
}
