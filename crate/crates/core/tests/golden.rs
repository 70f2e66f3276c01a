//! Golden-file regression for the DtN tables (per n, k) and the measured
//! Robin constant (per d, w). Run with `TRACTOR_CALC_BLESS=1` to rewrite.

use std::path::PathBuf;

use num_rational::Rational64;
use tractor_calc::cli;
use tractor_calc::hypersurface::measure_robin_constant;

const DTN_CASES: &[(usize, usize)] = &[(3, 2), (3, 4), (4, 2), (4, 4), (5, 2)];
const ROBIN_CASES: &[(usize, (i64, i64))] =
    &[(3, (0, 1)), (3, (1, 1)), (3, (1, 2)), (4, (0, 1)), (4, (1, 1)), (4, (1, 2)), (5, (0, 1)), (5, (1, 1)), (5, (-1, 1))];

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn bless() -> bool {
    std::env::var("TRACTOR_CALC_BLESS").is_ok_and(|v| v == "1")
}

fn dtn_csv(n: usize, k: usize) -> String {
    let args = ["tractor-calc", "dtn", "--n", &n.to_string(), "--k", &k.to_string(), "--format", "csv", "--seed", "1"];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(args, &mut out, &mut err);
    assert_eq!(code, 0, "dtn n={n} k={k}: {}", String::from_utf8_lossy(&err));
    String::from_utf8(out).unwrap()
}

fn parse_table(text: &str) -> Vec<(usize, f64, f64)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["l", "Lambda_l", "fit_residual"]);
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].parse().unwrap(), rec[1].parse().unwrap(), rec[2].parse().unwrap())
        })
        .collect()
}

/// Gamma-ratio closed form for the model DtN eigenvalue.
fn closed_form(n: usize, k: usize, l: usize) -> f64 {
    let (n, s, l) = (n as f64, (k as f64 + n as f64 - 1.0) / 2.0, l as f64);
    2f64.powf(n - 2.0 * s) * libm::tgamma(n / 2.0 - s) * libm::tgamma(l + s)
        / (libm::tgamma(s - n / 2.0) * libm::tgamma(l + n - s))
}

#[test]
fn dtn_tables_match_golden() {
    for &(n, k) in DTN_CASES {
        let path = golden_dir().join(format!("dtn_n{n}_k{k}.csv"));
        let now = dtn_csv(n, k);
        if bless() {
            std::fs::write(&path, &now).unwrap();
        }
        let frozen = parse_table(&std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display())));
        let fresh = parse_table(&now);
        assert_eq!(frozen.len(), fresh.len());
        for (a, b) in frozen.iter().zip(&fresh) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() <= 1e-9 * a.1.abs().max(1.0), "n={n} k={k} l={}: {} vs {}", a.0, a.1, b.1);
            assert!(b.2 <= 1e-6);
        }
    }
}

#[test]
fn frozen_dtn_tables_agree_with_closed_form() {
    for &(n, k) in DTN_CASES {
        let text = std::fs::read_to_string(golden_dir().join(format!("dtn_n{n}_k{k}.csv"))).unwrap();
        for (l, lam, _) in parse_table(&text) {
            let exact = closed_form(n, k, l);
            assert!((lam - exact).abs() <= 1e-7 * exact.abs().max(1.0), "n={n} k={k} l={l}: {lam} vs {exact}");
        }
    }
}

#[test]
fn robin_constants_match_golden() {
    for &(d, (p, q)) in ROBIN_CASES {
        let w = Rational64::new(p, q);
        let name = format!("robin_c_d{d}_w{}.txt", w.to_string().replace('/', "_").replace('-', "m"));
        let path = golden_dir().join(name);
        let m = measure_robin_constant(d, w, 20, 1).unwrap();
        if bless() {
            std::fs::write(&path, format!("{:.16e}\n", m.c)).unwrap();
        }
        let frozen: f64 = std::fs::read_to_string(&path).unwrap().trim().parse().unwrap();
        assert!((frozen - m.c).abs() <= 1e-10 * frozen.abs(), "d={d} w={w}: {frozen} vs {}", m.c);
        let oracle = 1.0 / (d as f64 + 2.0 * p as f64 / q as f64 - 2.0);
        assert!((frozen - oracle).abs() <= 1e-9 * oracle.abs(), "d={d} w={w}: frozen {frozen} vs 1/(d+2w-2) = {oracle}");
    }
}
