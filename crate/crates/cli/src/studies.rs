//! One function per command. Each returns tables and checks; nothing here touches the
//! filesystem or the clock.

use iterint_core::chaos::{phi, phi11, phi2, phi_circ_n, product_decompose};
use iterint_core::integral::{ibp_residual, riemann_error, second_moment, IntegralSpec};
use iterint_core::path::{anchored_gaps, fourth_moment_scaling, qv_convergence, square_decomposition, QvReport};
use iterint_core::tolerances::*;
use iterint_core::{BasisSpec, DistFamily, Grid, Kernel2, Model, ModelRef, StepFn, SymTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Command, Resolved, RunConfig};
use crate::report::{num, Check, StudyOutput, Table};
use crate::CliError;

type Out = Result<StudyOutput, CliError>;

pub fn run(r: &Resolved) -> Out {
    match r.command {
        Command::ProductCheck => product_check(r),
        Command::Riemann => riemann(r, true),
        Command::Ibp => ibp(r),
        Command::Norm => norm(r),
        Command::SquareDecomp => square_decomp(r),
        Command::MomentBound => moment_bound(r),
        Command::Qv => qv(r),
        Command::Martingale => martingale(r),
        Command::Selftest => selftest(r),
    }
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn models(r: &Resolved) -> impl Iterator<Item = (u64, String, &ModelRef)> {
    r.built.iter().enumerate().map(|(i, m)| (i as u64, m.tag(), m))
}

fn random_step(rng: &mut ChaCha8Rng, horizon: f64, max_level: u32) -> StepFn {
    let level = rng.random_range(0..=max_level);
    let grid = Grid::new(horizon, level).expect("level checked against the basis");
    let values = (0..grid.n_cells()).map(|_| rng.random_range(-2.0..2.0)).collect();
    StepFn::new(grid, values).expect("length matches grid")
}

/// The configured `(a, b)` pair, or `cases` random grid-adapted pairs.
fn pairs(r: &Resolved, a: &str, b: &str, rng: &mut ChaCha8Rng) -> Vec<(StepFn, StepFn)> {
    if r.has_pair(a, b) {
        return vec![(r.function(a, 1.0), r.function(b, 1.0))];
    }
    (0..r.cases)
        .map(|_| {
            let h = random_step(rng, r.horizon, r.basis_level);
            let g = random_step(rng, r.horizon, r.basis_level);
            (h, g)
        })
        .collect()
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Count of consecutive pairs that fail to decrease strictly.
fn increases(values: &[f64]) -> f64 {
    values.windows(2).filter(|p| !(p[1] < p[0])).count() as f64
}

fn product_check(r: &Resolved) -> Out {
    let basis = BasisSpec::new(r.basis_grid());
    let mut table = Table::new(
        "product-check.csv",
        &["model", "case", "h_level", "g_level", "residual", "constant_error"],
    );
    let mut checks = Vec::new();
    for (i, tag, model) in models(r) {
        let mut rng = stream(r.seed, i);
        let mut worst = Vec::new();
        for (c, (h, g)) in pairs(r, "h", "g", &mut rng).into_iter().enumerate() {
            let parts = product_decompose(&h, &g, &basis, model)?;
            let lhs = phi(&h, &basis, model)?.to_poly()?.mul(&phi(&g, &basis, model)?.to_poly()?);
            let residual = (&lhs - &parts.total()?.to_poly()?).max_abs_coefficient();
            let constant_error = (parts.constant - h.inner(&g)?).abs();
            table.push(vec![
                tag.clone(),
                c.to_string(),
                h.grid().level().to_string(),
                g.grid().level().to_string(),
                num(residual),
                num(constant_error),
            ]);
            worst.push(residual.max(constant_error));
        }
        checks.push(Check::below("product-check", &tag, "max polynomial residual", max_of(worst), REGRADE));
    }
    Ok(StudyOutput {
        tables: vec![table],
        checks,
        ..Default::default()
    })
}

fn riemann(r: &Resolved, with_threshold: bool) -> Out {
    let basis = BasisSpec::new(r.basis_grid());
    let t = r.t.unwrap_or(r.horizon);
    let mut table = Table::new("riemann.csv", &["model", "level", "mesh", "error", "relative_error"]);
    let mut checks = Vec::new();
    let mut details = serde_json::Map::new();
    for (_, tag, model) in models(r) {
        let spec = IntegralSpec::new(r.function("h", 1.0), r.function("g", 1.0), t, basis, model.clone())?;
        let ez2 = second_moment(&spec)?.direct;
        let mut rel = Vec::new();
        for level in r.levels.levels() {
            let partition = Grid::new(r.horizon, level)?;
            let err = riemann_error(&spec, &partition)?;
            let relative = err / ez2;
            table.push(vec![tag.clone(), level.to_string(), num(partition.cell_width()), num(err), num(relative)]);
            rel.push(relative);
        }
        details.insert(tag.clone(), json!({ "second_moment": ez2 }));
        checks.push(Check::at_most("riemann", &tag, "non-decreasing steps", increases(&rel), 0.0));
        if with_threshold {
            let last = *rel.last().expect("level range is non-empty");
            checks.push(Check::below("riemann", &tag, "relative error at finest level", last, RIEMANN_RELATIVE));
        }
    }
    Ok(StudyOutput {
        tables: vec![table],
        checks,
        details,
    })
}

fn ibp(r: &Resolved) -> Out {
    let basis = BasisSpec::new(r.basis_grid());
    let mut table = Table::new("ibp.csv", &["model", "case", "h_level", "g_level", "residual"]);
    let mut checks = Vec::new();
    for (i, tag, model) in models(r) {
        let mut rng = stream(r.seed, i);
        let mut worst = Vec::new();
        for (c, (h, g)) in pairs(r, "h", "g", &mut rng).into_iter().enumerate() {
            let residual = ibp_residual(&h, &g, &basis, model)?.max_abs_entry();
            table.push(vec![
                tag.clone(),
                c.to_string(),
                h.grid().level().to_string(),
                g.grid().level().to_string(),
                num(residual),
            ]);
            worst.push(residual);
        }
        checks.push(Check::below("ibp", &tag, "max kernel residual", max_of(worst), REGRADE));
    }
    Ok(StudyOutput {
        tables: vec![table],
        checks,
        ..Default::default()
    })
}

fn norm(r: &Resolved) -> Out {
    let grid = r.basis_grid();
    let basis = BasisSpec::new(grid);
    let mut table = Table::new("norm.csv", &["model", "case", "t", "direct", "formula", "abs_diff"]);
    let mut checks = Vec::new();
    for (i, tag, model) in models(r) {
        let mut rng = stream(r.seed, i);
        let configured = r.has_pair("h", "g");
        let mut worst = Vec::new();
        for (c, (h, g)) in pairs(r, "h", "g", &mut rng).into_iter().enumerate() {
            let t = if configured {
                r.t.unwrap_or(r.horizon)
            } else {
                grid.point(rng.random_range(0..=grid.n_cells()))
            };
            let s = second_moment(&IntegralSpec::new(h, g, t, basis, model.clone())?)?;
            let diff = (s.direct - s.formula).abs();
            table.push(vec![tag.clone(), c.to_string(), num(t), num(s.direct), num(s.formula), num(diff)]);
            worst.push(diff);
        }
        checks.push(Check::below("norm", &tag, "max |direct - formula|", max_of(worst), REGRADE));
    }
    for (family, level, target) in [(DistFamily::Gaussian, r.basis_level, 0.5), (DistFamily::Rademacher, 1, 0.25)] {
        let unit = Grid::new(1.0, 0)?;
        let spec = IntegralSpec::new(
            StepFn::constant(unit, 1.0),
            StepFn::constant(unit, 1.0),
            1.0,
            BasisSpec::new(Grid::new(1.0, level)?),
            Model::homogeneous(family)?,
        )?;
        let s = second_moment(&spec)?;
        let tag = family.to_string();
        table.push(vec![
            tag.clone(),
            "baseline".into(),
            num(1.0),
            num(s.direct),
            num(s.formula),
            num((s.direct - s.formula).abs()),
        ]);
        let err = (s.direct - target).abs().max((s.formula - target).abs());
        checks.push(Check::below("norm", &tag, &format!("baseline deviation from {target}"), err, ALGEBRA));
    }
    Ok(StudyOutput {
        tables: vec![table],
        checks,
        ..Default::default()
    })
}

fn random_kernel(rng: &mut ChaCha8Rng, n: usize) -> Kernel2 {
    let v: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Kernel2::from_fn(n, |j, k| v[j * n + k])
}

fn square_decomp(r: &Resolved) -> Out {
    let n = 1usize << r.basis_level;
    let mut table = Table::new("square-decomp.csv", &["model", "case", "order", "residual"]);
    let mut checks = Vec::new();
    let mut details = serde_json::Map::new();
    for (i, tag, model) in models(r) {
        let mut rng = stream(r.seed, i);
        let mut by_order = [0.0f64; 5];
        let mut order0_gap = 0.0f64;
        let mut readings = Vec::new();
        for c in 0..r.cases {
            let f = SymTensor::from_kernel(&random_kernel(&mut rng, n));
            let d = square_decomposition(&f, model)?;
            for (order, &res) in d.residual_by_order.iter().enumerate() {
                table.push(vec![tag.clone(), c.to_string(), order.to_string(), num(res)]);
                by_order[order] = by_order[order].max(res);
            }
            order0_gap = order0_gap.max((d.order0_oracle - d.second_moment).abs());
            readings.push(json!({
                "case": c,
                "oracle": d.order0_oracle,
                "tensor_reading": d.order0_tensor_reading,
                "a_reading": d.order0_a_reading,
            }));
        }
        let rows = table.rows.iter().filter(|row| row[0] == tag).count();
        checks.push(Check::at_most("square-decomp", &tag, "missing residual rows", (r.cases * 5 - rows) as f64, 0.0));
        checks.push(Check::below("square-decomp", &tag, "order-4 residual", by_order[4], END_TO_END));
        checks.push(Check::below("square-decomp", &tag, "order-0 oracle vs second moment", order0_gap, END_TO_END));
        if model.is_gaussian() {
            checks.push(Check::below("square-decomp", &tag, "max residual over orders", max_of(by_order), END_TO_END));
        }
        details.insert(tag, json!({ "max_residual_by_order": by_order, "order0": readings }));
    }
    Ok(StudyOutput {
        tables: vec![table],
        checks,
        details,
    })
}

fn moment_bound(r: &Resolved) -> Out {
    let basis = BasisSpec::new(r.basis_grid());
    let (h1, h2) = (r.function("h1", 1.0), r.function("h2", 1.0));
    let gaps = anchored_gaps(r.horizon, r.levels.lo..=r.levels.hi);
    let mut table = Table::new(
        "moment-bound.csv",
        &["model", "s", "t", "second_moment", "fourth_moment", "gap_ratio", "bound_ratio"],
    );
    let mut checks = Vec::new();
    let mut details = serde_json::Map::new();
    for (_, tag, model) in models(r) {
        let mut rep = fourth_moment_scaling(&h1, &h2, &basis, &gaps, model)?;
        if let Some(s) = r.s {
            let extra = fourth_moment_scaling(&h1, &h2, &basis, &[(s, r.t.unwrap_or(r.horizon))], model)?;
            rep.gaps.extend(extra.gaps);
        }
        for g in &rep.gaps {
            table.push(vec![
                tag.clone(),
                num(g.s),
                num(g.t),
                num(g.second_moment),
                num(g.fourth_moment),
                num(g.gap_ratio),
                num(g.bound_ratio),
            ]);
        }
        checks.push(Check::below("moment-bound", &tag, "gap ratio spread", rep.spread, MOMENT_RATIO_SPREAD));
        checks.push(Check::within("moment-bound", &tag, "log-log slope", rep.slope, MOMENT_SLOPE.0, MOMENT_SLOPE.1));
        details.insert(
            tag,
            json!({
                "slope": rep.slope,
                "spread": rep.spread,
                "candidate_constant": rep.candidate_constant,
                "empirical_constant": rep.empirical_constant,
            }),
        );
    }
    Ok(StudyOutput {
        tables: vec![table],
        checks,
        details,
    })
}

fn file_tag(tag: &str) -> String {
    tag.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn qv(r: &Resolved) -> Out {
    let basis = BasisSpec::new(r.basis_grid());
    let (h1, h2) = (r.function("h1", 1.0), r.function("h2", 1.0));
    let baseline = !r.functions.contains_key("h1") && !r.functions.contains_key("h2");
    let mut out = StudyOutput::default();
    for (i, tag, model) in models(r) {
        let rep = qv_convergence(&h1, &h2, &basis, &r.levels.levels(), r.replicates, r.seed, model)?;
        let mut table = Table::new(format!("qv-{}-{}.csv", i, file_tag(&tag)), &QvReport::CSV_HEADER);
        for row in &rep.rows {
            table.push(vec![
                row.level.to_string(),
                num(row.mesh),
                num(row.residual.mean),
                num(row.residual.ci95()),
                num(row.residual_nocorr.mean),
                rep.replicates.to_string(),
                rep.seed.to_string(),
            ]);
        }
        out.tables.push(table);
        let residuals: Vec<f64> = rep.rows.iter().map(|x| x.residual.mean).collect();
        out.checks.push(Check::at_most("qv", &tag, "non-decreasing residual steps", increases(&residuals), 0.0));
        let last = rep.rows.last().expect("level range is non-empty");
        if baseline && model.is_gaussian() {
            let target = r.horizon * r.horizon / 2.0;
            let z = (last.qv.mean - target).abs() / last.qv.se;
            out.checks.push(Check::at_most("qv", &tag, "finest mean QV deviation in standard errors", z, MC_SIGMAS));
        }
        if model.tables().iter().any(|t| t.m3() != 0.0) {
            let worse = rep.rows.iter().filter(|x| !(x.residual.mean < x.residual_nocorr.mean)).count();
            out.checks.push(Check::at_most("qv", &tag, "levels where correction does not help", worse as f64, 0.0));
        }
        let rows: Vec<Value> = rep
            .rows
            .iter()
            .map(|x| {
                json!({
                    "level": x.level,
                    "qv_mean": x.qv.mean,
                    "qv_se": x.qv.se,
                    "residual_se": x.residual.se,
                    "undersampled": x.undersampled,
                })
            })
            .collect();
        out.details.insert(tag, Value::Array(rows));
    }
    Ok(out)
}

fn random_sym(rng: &mut ChaCha8Rng, order: usize, width: u32) -> Result<SymTensor, CliError> {
    let mut t = SymTensor::zero(order)?;
    for _ in 0..rng.random_range(1..=4) {
        let tuple: Vec<u32> = (0..order).map(|_| rng.random_range(0..width)).collect();
        t.add_value(&tuple, rng.random_range(-1.5..1.5));
    }
    Ok(t)
}

fn martingale(r: &Resolved) -> Out {
    let n = 1usize << r.basis_level;
    let mut table = Table::new("martingale.csv", &["model", "case", "element", "cut", "max_coefficient"]);
    let mut checks = Vec::new();
    for (i, tag, model) in models(r) {
        let mut rng = stream(r.seed, i);
        let mut worst = 0.0f64;
        for c in 0..r.cases {
            let cut = rng.random_range(0..=n);
            let f = random_kernel(&mut rng, n);
            let mut elements = vec![("phi2".to_string(), phi2(&f, model)?), ("phi11".to_string(), phi11(&f, model)?)];
            for order in 1..=4 {
                let t = random_sym(&mut rng, order, n as u32)?;
                elements.push((format!("circ{order}"), phi_circ_n(&t, model)?));
            }
            for (name, z) in elements {
                let tail = z.sub(&z.truncate(cut))?.to_poly()?;
                let m = tail.conditional_expect(|j| (j as usize) < cut, model)?.max_abs_coefficient();
                table.push(vec![tag.clone(), c.to_string(), name, cut.to_string(), num(m)]);
                worst = worst.max(m);
            }
        }
        checks.push(Check::below("martingale", &tag, "max coefficient of E[tail | past]", worst, ALGEBRA));
    }
    Ok(StudyOutput {
        tables: vec![table],
        checks,
        ..Default::default()
    })
}

/// Every study at desk scale, sharing the selftest seed, replicate and case counts.
fn selftest(r: &Resolved) -> Out {
    let mut out = StudyOutput::default();
    let mut summary = Table::new("selftest.csv", &["study", "model", "check", "value", "relation", "limit", "pass"]);
    let plan: [(Command, Option<u32>, Option<&str>); 8] = [
        (Command::ProductCheck, None, None),
        (Command::Riemann, Some(6), Some("2:6")),
        (Command::Ibp, None, None),
        (Command::Norm, None, None),
        (Command::SquareDecomp, None, None),
        (Command::Martingale, None, None),
        (Command::MomentBound, Some(10), None),
        (Command::Qv, Some(8), Some("4:6")),
    ];
    for (command, basis_level, levels) in plan {
        let sub = RunConfig {
            seed: Some(r.seed),
            replicates: Some(r.replicates),
            cases: Some(r.cases),
            basis_level,
            levels: levels.map(|l| l.parse()).transpose()?,
            ..Default::default()
        }
        .resolve(command)?;
        let part = match command {
            // The mesh threshold is a rate target, not an invariant.
            Command::Riemann => riemann(&sub, false)?,
            _ => run(&sub)?,
        };
        for t in part.tables {
            out.tables.push(Table {
                file: format!("selftest-{}", t.file),
                ..t
            });
        }
        out.details.insert(command.name().into(), Value::Object(part.details));
        out.checks.extend(part.checks);
    }
    for c in &out.checks {
        summary.push(vec![
            c.study.clone(),
            c.model.clone(),
            c.name.clone(),
            num(c.value),
            serde_json::to_value(c.relation)?.as_str().unwrap_or_default().to_string(),
            c.limit.iter().map(|&x| num(x)).collect::<Vec<_>>().join(";"),
            c.pass.to_string(),
        ]);
    }
    out.tables.insert(0, summary);
    Ok(out)
}
