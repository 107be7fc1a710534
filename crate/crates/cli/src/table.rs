//! Half-table rendering of pairwise cosine matrices: indices across the top
//! and down the side, zeros on and below the diagonal, cosines above it.

use pedcc::RealMatrix;

/// Renders a strictly-upper-triangular cosine table with `dp` decimals.
pub fn render_half_table(table: &RealMatrix, dp: usize) -> String {
    let k = table.rows();
    let mut cells: Vec<Vec<String>> = Vec::with_capacity(k);
    for i in 0..k {
        let mut row = Vec::with_capacity(k);
        for j in 0..k {
            row.push(if j > i {
                format!("{:.*}", dp, table.get(i, j))
            } else {
                "0".to_string()
            });
        }
        cells.push(row);
    }
    let label_width = (k.saturating_sub(1)).to_string().len();
    let width = cells
        .iter()
        .flatten()
        .map(String::len)
        .max()
        .unwrap_or(1)
        .max(label_width);

    let mut out = String::new();
    out.push_str(&" ".repeat(label_width));
    for j in 0..k {
        out.push_str(&format!("  {j:>width$}"));
    }
    out.push('\n');
    for (i, row) in cells.iter().enumerate() {
        out.push_str(&format!("{i:>label_width$}"));
        for cell in row {
            out.push_str(&format!("  {cell:>width$}"));
        }
        out.push('\n');
    }
    out
}

/// All entries strictly above the diagonal, as rendered.
pub fn upper_entries(table: &RealMatrix, dp: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..table.rows() {
        for j in (i + 1)..table.cols() {
            out.push(format!("{:.*}", dp, table.get(i, j)));
        }
    }
    out
}
