use super::StatsError;

/// Dense row-major design matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, StatsError> {
        if data.len() != rows * cols {
            return Err(StatsError::Shape);
        }
        Ok(Design { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, StatsError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(StatsError::Shape);
        }
        Design::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub rss: f64,
}

/// Least squares via Householder QR of the design. Rank deficiency (a
/// diagonal of R negligible against the largest) is reported as a singular design.
pub fn ols_fit(y: &[f64], x: &Design) -> Result<OlsFit, StatsError> {
    let (n, p) = (x.rows, x.cols);
    if y.len() != n {
        return Err(StatsError::LengthMismatch(y.len(), n));
    }
    if n <= p || p == 0 {
        return Err(StatsError::TooShort {
            needed: p + 1,
            got: n,
        });
    }
    // Column-major working copy.
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| (0..n).map(|i| x.get(i, j)).collect()).collect();
    let mut qty = y.to_vec();
    let mut diag = vec![0.0; p];
    let col_scale: Vec<f64> = a
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    for k in 0..p {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(k + 1) {
            let dot: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&qty[k..]).map(|(a, b)| a * b).sum();
        let f = 2.0 * dot / vnorm2;
        for (c, vi) in qty[k..].iter_mut().zip(&v) {
            *c -= f * vi;
        }
    }

    let max_diag = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    for (k, d) in diag.iter().enumerate() {
        // Relative to both the largest pivot and the column's own scale.
        if d.abs() <= 1e-10 * max_diag || d.abs() <= 1e-12 * col_scale[k] || *d == 0.0 {
            return Err(StatsError::Singular);
        }
    }

    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = qty[k];
        for j in k + 1..p {
            s -= a[j][k] * beta[j];
        }
        beta[k] = s / diag[k];
    }
    let rss = (0..n)
        .map(|i| {
            let fitted: f64 = (0..p).map(|j| x.get(i, j) * beta[j]).sum();
            (y[i] - fitted).powi(2)
        })
        .sum();
    Ok(OlsFit {
        coefficients: beta,
        rss,
    })
}
