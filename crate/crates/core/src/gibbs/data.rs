use crate::eppf::Standardization;
use crate::error::{Error, Result};

/// Responses of `m` units over `T` time points, with optional locations.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    m: usize,
    n_times: usize,
    /// Row-major `m × T`.
    y: Vec<f64>,
    /// Standardized locations.
    coords: Option<Vec<[f64; 2]>>,
    standardization: Option<Standardization>,
    pub unit_ids: Vec<String>,
    pub time_ids: Vec<String>,
}

impl Dataset {
    /// `rows[i][t]` is the response of unit `i` at time `t`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::invalid("dataset has no units"));
        }
        let n_times = rows[0].len();
        if n_times == 0 {
            return Err(Error::invalid("dataset has no time points"));
        }
        let mut y = Vec::with_capacity(m * n_times);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_times {
                return Err(Error::invalid(format!(
                    "unit {} has {} values, expected {n_times}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(t) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite response at unit {}, time {}",
                    i + 1,
                    t + 1
                )));
            }
            y.extend(row);
        }
        Ok(Dataset {
            m,
            n_times,
            y,
            coords: None,
            standardization: None,
            unit_ids: (1..=m).map(|i| i.to_string()).collect(),
            time_ids: (1..=n_times).map(|t| t.to_string()).collect(),
        })
    }

    /// Attach raw locations; they are standardized per axis.
    pub fn with_raw_coords(mut self, raw: Vec<[f64; 2]>) -> Result<Self> {
        if raw.len() != self.m {
            return Err(Error::invalid(format!(
                "{} locations for {} units",
                raw.len(),
                self.m
            )));
        }
        if raw.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("locations must be finite"));
        }
        let s = Standardization::fit(&raw)?;
        self.coords = Some(s.apply(&raw));
        self.standardization = Some(s);
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    #[inline]
    pub fn y(&self, i: usize, t: usize) -> f64 {
        self.y[i * self.n_times + t]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.y[i * self.n_times..(i + 1) * self.n_times]
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Sample standard deviation of all responses.
    pub fn pooled_sd(&self) -> f64 {
        crate::stats::sample_variance(&self.y).sqrt()
    }

    pub fn time_mean(&self, t: usize) -> f64 {
        (0..self.m).map(|i| self.y(i, t)).sum::<f64>() / self.m as f64
    }

    #[cfg(test)]
    pub(crate) fn set_value(&mut self, i: usize, t: usize, v: f64) {
        self.y[i * self.n_times + t] = v;
    }
}
