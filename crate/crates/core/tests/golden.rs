//! Golden-file regression for the reproduced tables and reference outputs.
//! Regenerate with `UPDATE_GOLDEN=1 cargo test -p relay-dde --test golden`.

mod common;

use std::path::PathBuf;

use relay_dde::report::{write_table_csv, FloatFormat};
use relay_dde::{reproduce_table1, reproduce_table2, solve_exact, SmoothingSpec};

const REL_TOL: f64 = 1e-12;
/// Residual columns sit at roundoff level; compare those absolutely.
const ABS_FLOOR: f64 = 1e-13;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn cells_match(got: &str, want: &str) -> bool {
    match (got.parse::<f64>(), want.parse::<f64>()) {
        (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => {
            (a - b).abs() <= REL_TOL * a.abs().max(b.abs()) + ABS_FLOOR
        }
        _ => got == want,
    }
}

fn check(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1)", path.display()));
    let read = |s: &str| {
        csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(s.as_bytes())
            .records()
            .collect::<Result<Vec<_>, _>>()
            .unwrap()
    };
    let (got, want) = (read(actual), read(&expected));
    assert_eq!(got.len(), want.len(), "{name}: row count");
    for (i, (g, w)) in got.iter().zip(&want).enumerate() {
        assert_eq!(g.len(), w.len(), "{name}: width of line {}", i + 1);
        for (j, (a, b)) in g.iter().zip(w.iter()).enumerate() {
            assert!(
                cells_match(a, b),
                "{name}: line {}, column {}: {a} vs {b}",
                i + 1,
                j + 1
            );
        }
    }
}

fn table_csv(rows: &[relay_dde::TableRow]) -> String {
    let mut buf = Vec::new();
    write_table_csv(&mut buf, rows, FloatFormat::Fixed17).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn table1_golden() {
    check("table1.csv", &table_csv(&reproduce_table1()));
}

#[test]
fn table2_golden() {
    check("table2.csv", &table_csv(&reproduce_table2()));
}

#[test]
fn p1_orbit_golden() {
    let p = common::p1();
    let h = relay_dde::maps::fixed_point_single(&p).unwrap().h_star;
    let mut buf = Vec::new();
    solve_exact(&p, h, 2.0 * p.period())
        .unwrap()
        .write_csv(&mut buf, 0.25)
        .unwrap();
    check("p1_orbit.csv", &String::from_utf8(buf).unwrap());
}

#[test]
fn p1_f_tilde_golden() {
    let spec = SmoothingSpec::build(&common::p1(), 1e-3, 1e-3).unwrap();
    let mut buf = Vec::new();
    spec.write_f_tilde_csv(&mut buf, 40).unwrap();
    check("p1_f_tilde.csv", &String::from_utf8(buf).unwrap());
}

#[test]
fn comparison_tolerates_only_roundoff() {
    assert!(cells_match("1.0000000000000000e0", "1.0000000000001e0"));
    assert!(!cells_match("1.0", "1.00000001"));
    assert!(cells_match("3e-16", "-2e-15"));
    assert!(!cells_match("exact", "approx"));
}
