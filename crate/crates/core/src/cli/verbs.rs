use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::RunConfig;
use super::invariance::{check_invariance, unit_sphere, ellipsoid, InvariantOp};
use super::report::{num, Report, Table};
use crate::almost_einstein::{ae_residual, ball_structure, boundary_normal_match, classify, pe_check};
use crate::decomposition::{parse_rational, MatrixFactorSystem};
use crate::dtn_model::{dtn_table, scattering_parameter, RadialConfig};
use crate::einstein_gjms::{agreement_table, EinsteinScale, GjmsForm, GjmsSpec};
use crate::error::{CalcError, Result};
use crate::fields_charts::chart::{rng_from_seed, uniform_in_ball};
use crate::fields_charts::field::weight_f64;
use crate::fields_charts::geometry::curvature_pack;
use crate::fields_charts::{DensityField, MetricModel, ScalarJetField};
use crate::hypersurface::measure_robin_constant;
use crate::model_cone::{cap_model, descend_tractor, standard_ambient, AmbientForm};
use crate::tractor::field::TractorField;
use crate::tractor::ops::{box_k, parallel_defect};
use crate::tractor::value::tractor_metric;

pub fn run_verb(cfg: &RunConfig) -> Result<Report> {
    match cfg.verb.as_str() {
        "curvature" => curvature(cfg),
        "boundary-report" => boundary_report(cfg),
        "check-ae" => check_ae(cfg),
        "model" => model(cfg),
        "boxk-apply" => boxk_apply(cfg),
        "check-invariance" => invariance(cfg),
        "gjms-factor" => gjms_factor(cfg),
        "decompose" => decompose(cfg),
        "dtn" => dtn(cfg),
        v => Err(CalcError::Config(format!("unknown verb '{v}'"))),
    }
}

fn metric_named(name: &str, d: usize, radius: f64) -> Result<MetricModel> {
    match name {
        "flat" => MetricModel::flat(d),
        "sphere" => MetricModel::sphere(d, radius),
        "hyperbolic" => MetricModel::hyperbolic_ball(d),
        _ => Err(CalcError::Config(format!("unknown metric '{name}'"))),
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn curvature(cfg: &RunConfig) -> Result<Report> {
    let d: usize = cfg.get("dim")?;
    let radius: f64 = cfg.get("radius")?;
    let name = cfg.req("metric")?;
    let metric = metric_named(name, d, radius)?;
    let tol: f64 = cfg.get("tol")?;
    let pts = metric.chart.sample(cfg.seed()?, cfg.get("points")?);
    // P = c·g, J = d·c
    let c = match name {
        "flat" => 0.0,
        "sphere" => 0.5 / (radius * radius),
        _ => -0.5,
    };
    let mut rep = Report::new(cfg);
    let mut table = Table::new(&["point", "J", "J_expected", "P_defect", "W_max", "scalar"]);
    let (mut j_err, mut p_err, mut w_max) = (0.0f64, 0.0f64, 0.0f64);
    let mut rows = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let cp = curvature_pack(&metric, p)?;
        let pd = max_abs(&cp.schouten.iter().zip(&cp.metric).map(|(s, g)| s - c * g).collect::<Vec<_>>());
        let w = max_abs(&cp.weyl);
        let gm = max_abs(&cp.metric).max(1.0);
        j_err = j_err.max((cp.j - c * d as f64).abs());
        p_err = p_err.max(pd / gm);
        w_max = w_max.max(w / (gm * gm));
        table.push(vec![i.to_string(), num(cp.j), num(c * d as f64), num(pd), num(w), num(cp.scalar)]);
        rows.push(json!({"point": p, "J": cp.j, "schouten": cp.schouten, "weyl_max": w, "ricci": cp.ricci, "scalar": cp.scalar}));
    }
    rep.check("J anchor |J − J_expected|", j_err, tol);
    rep.check("Schouten anchor max|P − c g| / max|g|", p_err, tol);
    rep.check("Weyl max|W| / max|g|²", w_max, tol);
    rep.set("metric", metric.family.name())?;
    rep.set("expected_schouten_factor", c)?;
    rep.set("points", rows)?;
    rep.table = Some(table);
    Ok(rep)
}

fn boundary_report(cfg: &RunConfig) -> Result<Report> {
    let d: usize = cfg.get("dim")?;
    let tol: f64 = cfg.get("tol")?;
    let metric = metric_named(cfg.req("metric")?, d, 1.0)?;
    let surface = cfg.req("surface")?;
    let s = match surface {
        "sphere" => unit_sphere(metric)?,
        "ellipsoid" => ellipsoid(metric)?,
        v => return Err(CalcError::Config(format!("unknown surface '{v}'"))),
    };
    let mut rep = Report::new(cfg);
    let mut table = Table::new(&["point", "H", "umbilic_trace_free", "normal_tractor_variation", "N_norm2"]);
    let (mut n_err, mut umb) = (0.0f64, 0.0f64);
    for (i, p) in s.sample(cfg.seed()?, cfg.get("points")?).iter().enumerate() {
        let h = s.mean_curvature(p)?;
        let u = s.umbilicity_defect(p)?;
        let n = s.normal_tractor(p)?;
        let n2 = tractor_metric(&n, &n)?;
        n_err = n_err.max((n2 - 1.0).abs());
        umb = umb.max(u.trace_free_norm.max(u.normal_tractor_variation));
        table.push(vec![i.to_string(), num(h), num(u.trace_free_norm), num(u.normal_tractor_variation), num(n2)]);
    }
    rep.check("|N|² − 1", n_err, tol);
    if surface == "sphere" {
        rep.check("umbilicity defect", umb, tol);
    } else {
        rep.set("umbilicity_defect_max", umb)?;
    }
    let w = crate::decomposition::parse_rational(cfg.req("weight")?)?;
    let w64 = Rational64::new(
        w.numer().try_into().map_err(|_| CalcError::Config("weight too large".into()))?,
        w.denom().try_into().map_err(|_| CalcError::Config("weight too large".into()))?,
    );
    let denom = d as f64 + 2.0 * weight_f64(w64) - 2.0;
    if denom.abs() > 1e-12 {
        let rc = measure_robin_constant(d, w64, 20, cfg.seed()?)?;
        rep.check("Robin constant |c − 1/(d+2w−2)|", (rc.c - 1.0 / denom).abs(), tol);
        rep.check("Robin constant spread", rc.max_rel_spread, tol);
        rep.set("robin_constant", rc)?;
    } else {
        rep.set("robin_constant", "undefined at d + 2w − 2 = 0")?;
    }
    rep.table = Some(table);
    Ok(rep)
}

fn check_ae(cfg: &RunConfig) -> Result<Report> {
    let d: usize = cfg.get("dim")?;
    let tol: f64 = cfg.get("tol")?;
    let etol: f64 = cfg.get("einstein-tol")?;
    let btol: f64 = cfg.get("boundary-tol")?;
    let seed = cfg.seed()?;
    let ae = ball_structure(d)?;
    let pts = ae.metric.chart.sample(seed, cfg.get("points")?);
    let mut rep = Report::new(cfg);
    let (mut res, mut norm, mut par) = (0.0f64, 0.0f64, 0.0f64);
    for p in &pts {
        res = res.max(ae_residual(&ae.sigma, &ae.metric, p)?.max_abs);
        norm = norm.max((ae.norm2_at(p)? - 1.0).abs());
        par = par.max(ae.parallel_defect(p)?);
    }
    rep.check("ae_residual", res, tol);
    rep.check("|I|² − 1", norm, tol);
    rep.check("parallel_defect", par, tol);
    let pe = pe_check(&ae, seed)?;
    rep.check("Ric(g+) + (d−1) g+ (relative)", pe.einstein_residual, etol);
    rep.check("| |dσ|_g − 1 | on Σ", pe.special_defining_check, btol);
    let sigma = unit_sphere(ae.metric.clone())?;
    let (mut nm, mut umb) = (0.0f64, 0.0f64);
    for p in sigma.sample(seed, cfg.get("boundary-points")?) {
        nm = nm.max(boundary_normal_match(&ae, &p)?.discrepancy);
        let u = sigma.umbilicity_defect(&p)?;
        umb = umb.max(u.trace_free_norm.max(u.normal_tractor_variation));
    }
    rep.check("I − N on Σ", nm, btol);
    rep.check("umbilicity defect on Σ", umb, btol);
    rep.set("classification", classify(&ae, seed)?)?;
    rep.set("pe", pe)?;
    Ok(rep)
}

fn model(cfg: &RunConfig) -> Result<Report> {
    let d: usize = cfg.get("dim")?;
    let tol: f64 = cfg.get("tol")?;
    let norm: i32 = cfg.get("norm")?;
    let seed = cfg.seed()?;
    let npts: usize = cfg.get("points")?;
    let form = AmbientForm::standard(d);
    let i = standard_ambient(d, norm)?;
    let desc = descend_tractor(&form, &i)?;
    let mut rep = Report::new(cfg);
    rep.set("ambient_I", &i)?;
    rep.set("ambient_norm2", form.norm2(&i))?;
    let par = desc
        .metric
        .chart
        .sample(seed, 20)
        .iter()
        .map(|p| parallel_defect(&desc.tractor, &desc.metric, p))
        .collect::<Result<Vec<_>>>()?;
    rep.check("descended tractor parallel defect", max_abs(&par), tol);
    let cl = classify(&desc.ae()?, seed)?;
    rep.check("branch sign mismatch", if cl.sign as i32 == norm { 0.0 } else { 1.0 }, 0.0);
    let dd = d as f64 - 1.0;
    match norm {
        1 => {
            let cap = cap_model(&form, &i)?;
            let hyp = MetricModel::hyperbolic_ball(d)?;
            let mut err = 0.0f64;
            for p in hyp.chart.sample(seed, npts) {
                let (a, b) = (cap.values_at(&p)?, hyp.values_at(&p)?);
                for (x, y) in a.iter().zip(&b) {
                    err = err.max((x - y).abs() / y.abs().max(1.0));
                }
            }
            rep.check("cap metric vs hyperbolic ball (identity chart map)", err, tol);
        }
        -1 => {
            let cap = cap_model(&form, &i)?;
            let mut err = 0.0f64;
            for p in cap.chart.sample(seed, npts) {
                let c = curvature_pack(&cap, &p)?;
                let gm = max_abs(&c.metric).max(1e-300);
                err = err.max(max_abs(&c.ricci.iter().zip(&c.metric).map(|(r, g)| r - dd * g).collect::<Vec<_>>()) / gm);
            }
            rep.check("Ric − (d−1) g (relative)", err, tol);
        }
        _ => {
            let rep_sigma = desc.sigma.rep.clone();
            let omega = rep_sigma.map("-ln|σ|", |j| (&j * &j).ln().scale(-0.5));
            let g = MetricModel::conformal_rescale(omega, &desc.metric);
            let mut rng = rng_from_seed(seed);
            let mut err = 0.0f64;
            let mut n = 0;
            while n < npts {
                let p = uniform_in_ball(&mut rng, d, 1.0);
                if p.iter().map(|v| v * v).sum::<f64>() < 0.04 {
                    continue;
                }
                let c = curvature_pack(&g, &p)?;
                err = err.max(max_abs(&c.ricci) / max_abs(&c.metric));
                n += 1;
            }
            rep.check("Ric (relative), null branch", err, tol);
        }
    }
    rep.set("classification", cl)?;
    Ok(rep)
}

fn named_field(name: &str, d: usize) -> Result<ScalarJetField> {
    Ok(match name {
        "trig" => ScalarJetField::new(d, "cos(y0 y_{d-1}) + y1 y2", move |y| (&y[0] * &y[d - 1]).cos() + &(&y[1] * &y[2 % d])),
        "poly" => ScalarJetField::new(d, "1 + y0² y1 − y_{d-1}³/3", move |y| {
            (&(&y[0] * &y[0]) * &y[1]).add_scalar(1.0) - &(&(&y[d - 1] * &y[d - 1]) * &y[d - 1]).scale(1.0 / 3.0)
        }),
        v => return Err(CalcError::Config(format!("unknown field '{v}'"))),
    })
}

fn boxk_apply(cfg: &RunConfig) -> Result<Report> {
    let d: usize = cfg.get("dim")?;
    let k: usize = cfg.get("k")?;
    let metric = metric_named(cfg.req("metric")?, d, 1.0)?;
    let w = Rational64::new(k as i64 - d as i64, 2);
    let u = TractorField::from_density(&DensityField::new(w, metric.scale.clone(), named_field(cfg.req("field")?, d)?));
    let mut rep = Report::new(cfg);
    let mut table = Table::new(&["point", "value", "weight"]);
    let mut rows = Vec::new();
    for (i, p) in metric.chart.sample(cfg.seed()?, cfg.get("points")?).iter().enumerate() {
        let o = box_k(k, &u, &metric, p)?;
        table.push(vec![i.to_string(), num(o.value[0]), o.weight.to_string()]);
        rows.push(json!({"point": p, "value": o.value[0], "weight": o.weight.to_string(), "warning": o.warning}));
    }
    rep.set("k", k)?;
    rep.set("d", d)?;
    rep.set("scale_pair", json!({"base": metric.family.name()}))?;
    rep.set("input_weight", w.to_string())?;
    rep.set("points", rows)?;
    rep.table = Some(table);
    Ok(rep)
}

fn invariance(cfg: &RunConfig) -> Result<Report> {
    let op = InvariantOp::parse(cfg.req("op")?, cfg.get("k")?, cfg.get("ell")?)?;
    let weight = match cfg.raw("weight") {
        None => None,
        Some(s) => {
            let w = parse_rational(s)?;
            Some(Rational64::new(
                w.numer().try_into().map_err(|_| CalcError::Config("weight too large".into()))?,
                w.denom().try_into().map_err(|_| CalcError::Config("weight too large".into()))?,
            ))
        }
    };
    let r = check_invariance(op, cfg.get("dim")?, weight, cfg.seed()?, cfg.get("points")?)?;
    let mut rep = Report::new(cfg);
    rep.check("max relative error across scales", r.max_rel_err, cfg.get("tol")?);
    let mut table = Table::new(&["point", "reweighted", "rescaled", "rel_err"]);
    for (i, p) in r.points.iter().enumerate() {
        table.push(vec![i.to_string(), num(p.reweighted[0]), num(p.rescaled[0]), num(p.rel_err)]);
    }
    let k = match r.op {
        InvariantOp::BoxK(k) => json!(k),
        InvariantOp::Yamabe => json!(2),
        _ => Value::Null,
    };
    rep.set("op", r.op)?;
    rep.set("k", k)?;
    rep.set("d", r.d)?;
    rep.set("weight", &r.weight)?;
    rep.set("scale_pair", json!({"base": r.base, "rescaled": "exp(2ω)·base, ω seeded random", "seed": r.seed}))?;
    rep.set("max_rel_err", r.max_rel_err)?;
    rep.set("floor", r.floor)?;
    rep.set("points", &r.points)?;
    rep.table = Some(table);
    Ok(rep)
}

fn gjms_factor(cfg: &RunConfig) -> Result<Report> {
    let k: usize = cfg.get("k")?;
    let d: usize = cfg.get("dim")?;
    let spec = GjmsSpec::new(k, d)?.with_k_cap(cfg.get("k-cap")?);
    if k > spec.k_cap {
        return Err(CalcError::Capability(format!("k = {k} exceeds the cap {}", spec.k_cap)));
    }
    let es = EinsteinScale::unit_ball(d)?;
    let rep_u = ScalarJetField::new(d, "probe", move |y| {
        let a = (&y[0] * &y[1]).scale(0.4);
        let b = (&(&y[2 % d] * &y[2 % d]) * &y[0]).scale(0.3);
        (&a - &b).add_scalar(1.2) + &y[d - 1].scale(0.7) + &y[1].scale(0.5).sin()
    });
    let u = DensityField::new(spec.input_weight(), es.ae.metric.scale.clone(), rep_u);
    let mut rng = rng_from_seed(cfg.seed()?);
    let pts: Vec<Vec<f64>> = (0..cfg.get::<usize>("points")?).map(|_| uniform_in_ball(&mut rng, d, 0.8)).collect();
    let rows = agreement_table(&spec, &GjmsForm::ALL, &u, &es, &pts)?;
    let mut rep = Report::new(cfg);
    rep.check("max relative spread of the four forms", rows.iter().map(|r| r.max_rel_spread).fold(0.0, f64::max), cfg.get("tol")?);
    #[derive(Serialize)]
    struct Factors {
        lambdas: Vec<String>,
        s: Vec<String>,
        shifts: Vec<String>,
        input_weight: String,
        output_weight: String,
    }
    rep.set(
        "factorization",
        Factors {
            lambdas: spec.lambdas.iter().map(|x| x.to_string()).collect(),
            s: spec.s.iter().map(|x| x.to_string()).collect(),
            shifts: spec.shifts().iter().map(|x| x.to_string()).collect(),
            input_weight: spec.input_weight().to_string(),
            output_weight: spec.output_weight().to_string(),
        },
    )?;
    let mut table = Table::new(&["point", "sigma", "tractor", "iterated", "product", "scp", "max_rel_spread"]);
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![i.to_string(), num(r.sigma)];
        row.extend(r.values.iter().map(|(_, v)| num(*v)));
        row.push(num(r.max_rel_spread));
        table.push(row);
    }
    rep.set("rows", &rows)?;
    rep.table = Some(table);
    Ok(rep)
}

fn parse_list(s: &str) -> Result<Vec<BigRational>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| parse_rational(t.trim())).collect()
}

/// `"a,b;c,d"`, or `@path` to a file with one row per line.
pub fn parse_matrix(s: &str) -> Result<Vec<Vec<BigRational>>> {
    let text = match s.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)?,
        None => s.to_string(),
    };
    text.split([';', '\n'])
        .map(|r| r.trim())
        .filter(|r| !r.is_empty() && !r.starts_with('#'))
        .map(|r| r.split([',', ' ', '\t']).filter(|t| !t.is_empty()).map(parse_rational).collect())
        .collect()
}

fn decompose(cfg: &RunConfig) -> Result<Report> {
    let mu = parse_list(cfg.req("mu")?)?;
    let e = parse_matrix(cfg.req("matrix")?)?;
    let n = e.len();
    let v = match cfg.raw("vector") {
        Some(s) => parse_list(s)?,
        None => {
            let mut rng = rng_from_seed(cfg.seed()?);
            (0..n).map(|_| BigRational::from_integer(BigInt::from(rng.random_range(-9i64..=9)))).collect()
        }
    };
    let sys = MatrixFactorSystem::new(e, mu)?;
    let proj = sys.project(&v)?;
    let id = sys.identity_decomposition_check(&v)?;
    let mut rep = Report::new(cfg);
    rep.check("null-space residual max|∏(E − μ)v|", proj.null_residual, 0.0);
    rep.check("Σ components − v", proj.sum_residual, 0.0);
    rep.check("eigen residual max|(E − μ_i)v_i|", proj.eigen_residuals.iter().cloned().fold(0.0, f64::max), 0.0);
    rep.set("vector", v.iter().map(|x| x.to_string()).collect::<Vec<_>>())?;
    rep.set("q", sys.q.iter().map(|x| x.to_string()).collect::<Vec<_>>())?;
    rep.set("identity_residual", id.to_string())?;
    rep.set("projection", &proj)?;
    let mut table = Table::new(&["component", "mu", "entries"]);
    for (i, c) in proj.components.iter().enumerate() {
        table.push(vec![i.to_string(), sys.mu[i].to_string(), c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")]);
    }
    rep.table = Some(table);
    Ok(rep)
}

fn dtn(cfg: &RunConfig) -> Result<Report> {
    let n: usize = cfg.get("n")?;
    let k: usize = cfg.get("k")?;
    let lmax: usize = cfg.get("lmax")?;
    let tol: f64 = cfg.get("tol")?;
    let s = scattering_parameter(k, n, 0)?;
    let rc = RadialConfig { h: cfg.get("grid")?, ..RadialConfig::default() };
    let table = dtn_table(n, s, lmax, &rc)?;
    let mut rep = Report::new(cfg);
    let (fit, ode) = table.worst_residuals();
    rep.check("fit residual", fit, table.tolerances.fit_residual);
    rep.check("ODE residual", ode, table.tolerances.ode_residual);
    if cfg.flag("refine")? {
        let fine = dtn_table(n, s, lmax, &rc.refined())?;
        rep.check("grid halving (relative)", table.relative_difference(&fine), tol);
    }
    if lmax >= 2 {
        let lo = (lmax * 3 / 4).max(1);
        rep.set("lambda_over_l_spread", json!({"from": lo, "to": lmax, "spread": table.ratio_spread(lo, lmax)?}))?;
    }
    rep.set("monotone_abs_growth", table.monotone())?;
    rep.set("table", &table)?;
    let mut t = Table::new(&["l", "Lambda_l", "fit_residual"]);
    for r in &table.rows {
        t.push(vec![r.l.to_string(), num(r.lambda), num(r.fit_residual)]);
    }
    rep.table = Some(t);
    Ok(rep)
}
