//! Reference detection metrics per model and site, cells kept as printed.

#![allow(dead_code)]

use eosynth_eval::fixture::SiteCounts;
use eosynth_eval::MetricsRow;

pub const SITES: [&str; 4] = ["North Sea Basin", "East Chinese Sea", "Persian Gulf", "Sea of Azov"];

/// `[model, site, GT, TP, FP, FN, Rc, Pr, F1, AP, GT_WT, TP_WT, Rc_WT]`;
/// empty strings are blank cells.
pub const ROWS: [[&str; 13]; 20] = [
    ["Model-1", "Combined", "67", "31", "252", "36", "0.463", "0.11", "0.177", "0.21", "5374", "863", "0.161"],
    ["Model-1", "North Sea Basin", "42", "19", "85", "23", "0.452", "0.183", "0.260", "0.217", "3787", "687", "0.181"],
    ["Model-1", "East Chinese Sea", "25", "12", "67", "13", "0.48", "0.152", "0.231", "0.282", "1587", "176", "0.111"],
    ["Model-1", "Persian Gulf", "0", "", "100", "", "", "", "", "", "", "", ""],
    ["Model-1", "Sea of Azov", "0", "", "0", "", "", "", "", "", "", "", ""],
    ["Model-2", "Combined", "67", "59", "80", "8", "0.881", "0.424", "0.573", "0.842", "5374", "5263", "0.979"],
    ["Model-2", "North Sea Basin", "42", "40", "3", "2", "0.952", "0.93", "0.941", "0.952", "3787", "3764", "0.994"],
    ["Model-2", "East Chinese Sea", "25", "19", "22", "6", "0.76", "0.46", "0.576", "0.712", "1587", "1499", "0.945"],
    ["Model-2", "Persian Gulf", "0", "", "31", "", "", "", "", "", "", "", ""],
    ["Model-2", "Sea of Azov", "0", "", "24", "", "", "", "", "", "", "", ""],
    ["Model-3", "Combined", "67", "61", "11", "6", "0.91", "0.847", "0.878", "0.901", "5374", "5185", "0.965"],
    ["Model-3", "North Sea Basin", "42", "40", "1", "2", "0.952", "0.976", "0.964", "0.952", "3787", "3742", "0.988"],
    ["Model-3", "East Chinese Sea", "25", "21", "5", "4", "0.84", "0.808", "0.824", "0.817", "1587", "1443", "0.91"],
    ["Model-3", "Persian Gulf", "0", "", "5", "", "", "", "", "", "", "", ""],
    ["Model-3", "Sea of Azov", "0", "", "0", "", "", "", "", "", "", "", ""],
    ["Model-3+", "Combined", "67", "61", "14", "6", "0.91", "0.813", "0.86", "0.904", "5374", "5296", "0.985"],
    ["Model-3+", "North Sea Basin", "42", "40", "0", "2", "0.952", "1", "0.976", "0.952", "3787", "3756", "0.992"],
    ["Model-3+", "East Chinese Sea", "25", "21", "4", "4", "0.84", "0.84", "0.84", "0.831", "1587", "1540", "0.97"],
    ["Model-3+", "Persian Gulf", "0", "", "10", "", "", "", "", "", "", "", ""],
    ["Model-3+", "Sea of Azov", "0", "", "0", "", "", "", "", "", "", "", ""],
];

pub const MODELS: [&str; 4] = ["Model-1", "Model-2", "Model-3", "Model-3+"];

pub fn rows_of(model: &str) -> Vec<&'static [&'static str; 13]> {
    ROWS.iter().filter(|r| r[0] == model).collect()
}

fn count(cell: &str) -> usize {
    if cell.is_empty() {
        0
    } else {
        cell.parse().unwrap()
    }
}

/// Per-site fixture counts of one model.
pub fn site_counts(model: &str) -> Vec<SiteCounts> {
    rows_of(model)
        .into_iter()
        .filter(|r| r[1] != "Combined")
        .map(|r| SiteCounts::new(r[1], count(r[3]), count(r[4]), count(r[5]), count(r[10]), count(r[11])))
        .collect()
}

/// `value` rounded to the number of decimals printed in `cell` equals it.
pub fn agrees(cell: &str, value: Option<f64>) -> bool {
    match value {
        None => cell.is_empty(),
        Some(v) => {
            let decimals = cell.split_once('.').map_or(0, |(_, d)| d.len());
            !cell.is_empty() && format!("{v:.decimals$}") == cell
        }
    }
}

/// Cells of `row` that disagree with the table, AP excluded; the fixture
/// ranks true positives first, which fixes AP at the recall.
pub fn mismatches(table: &[&str; 13], row: &MetricsRow) -> Vec<String> {
    let mut out = Vec::new();
    let counts = [(2, row.gt), (4, row.fp), (10, row.gt_wt), (11, row.tp_wt)];
    for (col, v) in counts {
        if count(table[col]) != v {
            out.push(format!("column {col}: {v} vs {:?}", table[col]));
        }
    }
    if row.gt > 0 && (count(table[3]) != row.tp || count(table[5]) != row.fn_) {
        out.push(format!("TP/FN {}/{}", row.tp, row.fn_));
    }
    let rates = [(6, row.recall), (7, row.precision), (8, row.f1), (12, row.recall_wt)];
    for (col, v) in rates {
        if !agrees(table[col], v) {
            out.push(format!("column {col}: {v:?} vs {:?}", table[col]));
        }
    }
    out
}
