//! The internal consistency suite behind `trisub validate`.
//!
//! Each check measures a residual against a fixed threshold; the report lists
//! one line per check with both numbers. An optional mixing-angle
//! perturbation can be injected into the multinomial path as a negative
//! control: it must make the oracle-equivalence check fail.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

use trisub::analysis::{moment_matrix, participation_ratio};
use trisub::detect::{conditional_pure_state, joint_distribution, PnrPovm, SourceInfo};
use trisub::evolve::{
    evolve_multinomial, evolve_oracle, prepare_input, tail_mass, SqueezeSource,
};
use trisub::trimer::{intensity_ratio, solve_zf, CouplerConfig, TrimerUnitary};

use crate::config::RunConfig;
use crate::output::fmt_sig12;

pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub threshold: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual < self.threshold
    }
}

/// Grid defaults when the user gives no explicit r or N values.
const DEFAULT_R: [f64; 2] = [0.2, 0.6];
const DEFAULT_N: [u32; 4] = [0, 1, 2, 3];

/// l_max ceiling for the oracle-equivalence check; the dense
/// diagonalization cost is cubic in the block dimension.
const ORACLE_CHECK_L_MAX: u32 = 10;

pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub text: String,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

pub fn run(config: &RunConfig, theta_perturbation: f64) -> ValidationReport {
    let r_values: Vec<f64> = if config.r_values.is_empty() {
        DEFAULT_R.to_vec()
    } else {
        config.r_values.clone()
    };
    let n_values: Vec<u32> = if config.n_values.is_empty() {
        DEFAULT_N.to_vec()
    } else {
        config.n_values.clone()
    };

    let mut checks = Vec::new();

    // 1. unitarity over random mixing angles
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_CAFE);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let theta = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        worst = worst.max(TrimerUnitary::from_theta(theta).unitarity_defect());
    }
    checks.push(Check {
        name: "coupler_unitarity",
        residual: worst,
        threshold: 1e-12,
    });

    // 2. exchange-symmetry identities of the coupler matrix
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let theta = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        let u = TrimerUnitary::from_theta(theta);
        worst = worst
            .max((u.entry(0, 0) - u.entry(2, 2)).norm())
            .max((u.entry(0, 1) - u.entry(2, 1)).norm())
            .max((u.entry(0, 2) - u.entry(2, 0)).norm());
    }
    checks.push(Check {
        name: "coupler_exchange_identities",
        residual: worst,
        threshold: 1e-15,
    });

    // 3. solve_zf round trip over targets in [0, 10]
    let mut worst = 0.0f64;
    for i in 0..=40 {
        let target = i as f64 * 0.25;
        let z = solve_zf(config.kappa, target).expect("non-negative target");
        let cfg = CouplerConfig::new(config.kappa, z).expect("valid coupler");
        let ratio = intensity_ratio(&cfg).expect("away from the divergence");
        worst = worst.max((ratio - target).abs());
    }
    checks.push(Check {
        name: "zf_round_trip",
        residual: worst,
        threshold: 1e-10,
    });

    // 4. oracle equivalence (the perturbation hook shifts the multinomial
    // path's mixing angle)
    let mut worst = 0.0f64;
    for &r in &r_values {
        let l_max = config.l_max_for(r).min(ORACLE_CHECK_L_MAX);
        let source = SqueezeSource::new(Complex64::new(r, 0.0), l_max).expect("valid source");
        let input = prepare_input(&source);
        let unitary = TrimerUnitary::from_theta(config.theta + theta_perturbation);
        let coupler = CouplerConfig::new(config.kappa, config.z).expect("valid coupler");
        let multinomial = evolve_multinomial(&input, &unitary).expect("valid support");
        let oracle = evolve_oracle(&input, &coupler).expect("within block limit");
        for (triple, amp) in oracle.triples() {
            worst = worst.max((multinomial.amplitude(triple) - amp).norm());
        }
    }
    checks.push(Check {
        name: "oracle_equivalence",
        residual: worst,
        threshold: 1e-9,
    });

    // evolved states reused by the remaining checks
    let unitary = TrimerUnitary::from_theta(config.theta);
    let evolved: Vec<(f64, u32, trisub::fock::ThreeModeState)> = r_values
        .iter()
        .map(|&r| {
            let l_max = config.l_max_for(r);
            let source = SqueezeSource::new(Complex64::new(r, 0.0), l_max).expect("valid source");
            let input = prepare_input(&source);
            let out = evolve_multinomial(&input, &unitary).expect("valid support");
            (r, l_max, out)
        })
        .collect();

    // 5. norm and block-weight conservation
    let mut worst = 0.0f64;
    for (r, l_max, out) in &evolved {
        let source =
            SqueezeSource::new(Complex64::new(*r, 0.0), *l_max).expect("valid source");
        let input = prepare_input(&source);
        worst = worst.max((out.norm_sqr() - input.norm_sqr()).abs());
        let before = input.block_weights();
        let after = out.block_weights();
        for (total, w) in &before {
            worst = worst.max((after.get(total).copied().unwrap_or(0.0) - w).abs());
        }
    }
    checks.push(Check {
        name: "number_conservation",
        residual: worst,
        threshold: 1e-10,
    });

    // 6. parity selection at ideal detection
    let mut worst = 0.0f64;
    for (r, _, out) in &evolved {
        for &n_sub in &n_values {
            let povm = PnrPovm::new(n_sub, 1.0).expect("valid povm");
            let dist = match joint_distribution(
                out,
                &povm,
                1.0,
                SourceInfo {
                    r: Complex64::new(*r, 0.0),
                    theta: config.theta,
                },
            ) {
                Ok(d) => d,
                Err(_) => continue, // herald impossible at this grid point
            };
            for m in 0..dist.dim() {
                for n in 0..dist.dim() {
                    if (m + n + n_sub as usize) % 2 == 1 {
                        worst = worst.max(dist.prob(m, n));
                    }
                }
            }
        }
    }
    checks.push(Check {
        name: "parity_selection",
        residual: worst,
        threshold: 1e-12,
    });

    // 7 & 8. exchange symmetry and normalization at the configured
    // efficiencies
    let mut worst_symmetry = 0.0f64;
    let mut worst_norm = 0.0f64;
    for (r, _, out) in &evolved {
        for &n_sub in &n_values {
            let povm = PnrPovm::new(n_sub, config.eta_b).expect("valid povm");
            let dist = match joint_distribution(
                out,
                &povm,
                config.eta_outer,
                SourceInfo {
                    r: Complex64::new(*r, 0.0),
                    theta: config.theta,
                },
            ) {
                Ok(d) => d,
                Err(_) => continue,
            };
            worst_norm = worst_norm.max((dist.sum() - 1.0).abs());
            for m in 0..dist.dim() {
                for n in 0..m {
                    worst_symmetry = worst_symmetry.max((dist.prob(m, n) - dist.prob(n, m)).abs());
                }
            }
        }
    }
    checks.push(Check {
        name: "exchange_symmetry",
        residual: worst_symmetry,
        threshold: 1e-10,
    });
    checks.push(Check {
        name: "distribution_normalization",
        residual: worst_norm,
        threshold: 1e-9,
    });

    // 9. POVM completeness
    let mut worst = 0.0f64;
    for eta in [0.5, 0.8, 1.0, config.eta_b] {
        for j in 0..=30u32 {
            let total: f64 = (0..=j)
                .map(|n| PnrPovm::new(n, eta).expect("valid povm").weight(j))
                .sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    checks.push(Check {
        name: "povm_completeness",
        residual: worst,
        threshold: 1e-12,
    });

    // 10. ideal-detection consistency: joint distribution vs squared
    // conditional amplitudes
    let mut worst = 0.0f64;
    for (r, _, out) in &evolved {
        for &n_sub in &n_values {
            let heralded = match conditional_pure_state(out, n_sub) {
                Ok(h) => h,
                Err(_) => continue,
            };
            let povm = PnrPovm::new(n_sub, 1.0).expect("valid povm");
            let dist = joint_distribution(
                out,
                &povm,
                1.0,
                SourceInfo {
                    r: Complex64::new(*r, 0.0),
                    theta: config.theta,
                },
            )
            .expect("herald possible");
            worst = worst.max((dist.success_probability() - heralded.success_probability).abs());
            for m in 0..dist.dim() {
                for n in 0..dist.dim() {
                    worst = worst
                        .max((dist.prob(m, n) - heralded.state.amplitude(m, n).norm_sqr()).abs());
                }
            }
        }
    }
    checks.push(Check {
        name: "conditional_consistency",
        residual: worst,
        threshold: 1e-12,
    });

    // 11. truncation tail bound at the configured l_max
    let mut worst = 0.0f64;
    for &r in &r_values {
        worst = worst.max(tail_mass(r, config.l_max_for(r)));
    }
    checks.push(Check {
        name: "truncation_tail",
        residual: worst,
        threshold: config.tail_tol,
    });

    // 12. observable shift under l_max + 4 (moderate squeezing only; the
    // shift is the quantity under test, so heavy tails are excluded)
    let mut worst = 0.0f64;
    for &r in &r_values {
        if r > 0.6 {
            continue;
        }
        let l_max = config.l_max_for(r);
        let mut values = Vec::new();
        for lm in [l_max, l_max + 4] {
            let source = SqueezeSource::new(Complex64::new(r, 0.0), lm).expect("valid source");
            let out = evolve_multinomial(&prepare_input(&source), &unitary)
                .expect("valid support");
            let povm = PnrPovm::new(1, 1.0).expect("valid povm");
            let dist = joint_distribution(
                &out,
                &povm,
                1.0,
                SourceInfo {
                    r: Complex64::new(r, 0.0),
                    theta: config.theta,
                },
            )
            .expect("herald possible");
            let det = moment_matrix(&dist).expect("normalized").determinant();
            let heralded = conditional_pure_state(&out, 1).expect("herald possible");
            let xi = participation_ratio(&heralded.state)
                .expect("normalized")
                .participation_ratio();
            values.push((det, xi));
        }
        worst = worst
            .max((values[0].0 - values[1].0).abs())
            .max((values[0].1 - values[1].1).abs());
    }
    checks.push(Check {
        name: "truncation_convergence",
        residual: worst,
        threshold: 1e-8,
    });

    let text = render(config, theta_perturbation, &r_values, &n_values, &checks);
    ValidationReport { checks, text }
}

fn render(
    config: &RunConfig,
    theta_perturbation: f64,
    r_values: &[f64],
    n_values: &[u32],
    checks: &[Check],
) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "# trisub validate");
    let _ = writeln!(
        text,
        "# r = {}",
        r_values
            .iter()
            .map(|r| fmt_sig12(*r))
            .collect::<Vec<_>>()
            .join(",")
    );
    let _ = writeln!(
        text,
        "# N = {}",
        n_values
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(",")
    );
    let _ = writeln!(text, "# kappa = {}", fmt_sig12(config.kappa));
    let _ = writeln!(text, "# z = {}", fmt_sig12(config.z));
    let _ = writeln!(text, "# theta = {}", fmt_sig12(config.theta));
    let _ = writeln!(text, "# eta_b = {}", fmt_sig12(config.eta_b));
    let _ = writeln!(text, "# eta_outer = {}", fmt_sig12(config.eta_outer));
    let _ = writeln!(text, "# tail_tol = {}", fmt_sig12(config.tail_tol));
    let _ = writeln!(
        text,
        "# lmax = {}",
        match config.l_max_override {
            Some(v) => format!("{v} (override)"),
            None => format!(
                "auto: {}",
                r_values
                    .iter()
                    .map(|&r| format!("{}->{}", fmt_sig12(r), config.l_max_for(r)))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        }
    );
    if theta_perturbation != 0.0 {
        let _ = writeln!(
            text,
            "# negative control: theta perturbed by {} in the multinomial path",
            fmt_sig12(theta_perturbation)
        );
    }
    for check in checks {
        let _ = writeln!(
            text,
            "{} {:<28} residual {:<20} threshold {}",
            if check.passed() { "PASS" } else { "FAIL" },
            check.name,
            fmt_sig12(check.residual),
            fmt_sig12(check.threshold),
        );
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    let _ = writeln!(
        text,
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    text
}
