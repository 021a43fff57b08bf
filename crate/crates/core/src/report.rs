//! Emission helpers shared by every table writer: floats at 12 significant
//! digits and a `# key=value` header so outputs are byte-stable.

use std::fmt::Write;

/// `x` with 12 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        // fold −0 into 0 so symmetric results print identically
        return format!("{:.11e}", 0.0);
    }
    format!("{x:.11e}")
}

/// A CSV table with a comment header line. Rows are pre-formatted cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Renders `# <header>`, the column line, then the rows.
    pub fn to_csv(&self, header: &str) -> String {
        let mut s = String::new();
        if !header.is_empty() {
            let _ = writeln!(s, "# {header}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_float(0.59301), "5.93010000000e-1");
        assert_eq!(fmt_float(-0.0), fmt_float(0.0));
        let mut t = Table::new(&["n", "x"]);
        t.push(vec!["1".into(), fmt_float(2.0)]);
        assert_eq!(t.to_csv("seed=1"), "# seed=1\nn,x\n1,2.00000000000e0\n");
    }
}
