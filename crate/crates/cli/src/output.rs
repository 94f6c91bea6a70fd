//! Deterministic output formatting: CSV floats carry 12 significant digits
//! so repeated runs are byte-identical and diffable.

use std::fmt::Write as _;

/// 12-significant-digit scientific form, with a plain "0" for zeros.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{:.11e}", x)
}

const PAULI_LABELS: [&str; 4] = ["σ0", "σ1", "σ2", "σ3"];

/// 4x4 Pauli table as CSV with header row and column.
pub fn table_csv(table: &[[f64; 4]; 4]) -> String {
    let mut out = String::new();
    out.push_str(&format!(",{}\n", PAULI_LABELS.join(",")));
    for (row, label) in table.iter().zip(PAULI_LABELS) {
        let cells: Vec<String> = row.iter().map(|&x| fmt_sig(x)).collect();
        let _ = writeln!(out, "{label},{}", cells.join(","));
    }
    out
}

pub fn region_header() -> &'static str {
    "epsilon,gamma,r3,inside\n"
}

pub fn region_row(eps: f64, gamma: f64, r3: f64, inside: bool) -> String {
    format!(
        "{},{},{},{}\n",
        fmt_sig(eps),
        fmt_sig(gamma),
        fmt_sig(r3),
        u8::from(inside)
    )
}

pub fn bloch_header() -> &'static str {
    "x_in,y_in,z_in,x_out,y_out,z_out\n"
}

pub fn bloch_row(inp: &qsot_core::adc::BlochPoint, out: &qsot_core::adc::BlochPoint) -> String {
    format!(
        "{},{},{},{},{},{}\n",
        fmt_sig(inp.x),
        fmt_sig(inp.y),
        fmt_sig(inp.z),
        fmt_sig(out.x),
        fmt_sig(out.y),
        fmt_sig(out.z)
    )
}
