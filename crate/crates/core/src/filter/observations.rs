use std::io::{Read, Write};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::TimeGrid;

/// Sampled observation `y(t)`, linearly interpolated between samples and
/// held constant outside them.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationRecord {
    pub times: Vec<f64>,
    /// Row-major: `values[k * dim .. (k + 1) * dim]` is `y(times[k])`.
    values: Vec<f64>,
    dim: usize,
}

impl ObservationRecord {
    pub fn new(times: Vec<f64>, samples: Vec<DVector<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != samples.len() {
            return Err(Error::InvalidInput(format!(
                "{} observation times for {} samples",
                times.len(),
                samples.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("observation times must be strictly increasing".into()));
        }
        let dim = samples[0].len();
        if samples.iter().any(|s| s.len() != dim) {
            return Err(Error::Shape("observation samples have different lengths".into()));
        }
        let values: Vec<f64> = samples.iter().flat_map(|s| s.iter().copied()).collect();
        if values.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("observations contain non-finite values".into()));
        }
        Ok(Self { times, values, dim })
    }

    /// Sample `y` at the nodes of `grid`.
    pub fn from_fn(grid: &TimeGrid, mut y: impl FnMut(f64) -> DVector<f64>) -> Result<Self> {
        let times: Vec<f64> = grid.nodes().collect();
        let samples = times.iter().map(|&t| y(t)).collect();
        Self::new(times, samples)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn at(&self, t: f64, out: &mut [f64]) {
        let n = self.times.len();
        let j = self.times.partition_point(|&s| s <= t);
        if j == 0 || n == 1 {
            out.copy_from_slice(self.sample(0));
        } else if j == n {
            out.copy_from_slice(self.sample(n - 1));
        } else {
            let (ta, tb) = (self.times[j - 1], self.times[j]);
            let w = (t - ta) / (tb - ta);
            let (a, b) = (self.sample(j - 1), self.sample(j));
            for i in 0..self.dim {
                out[i] = a[i] + w * (b[i] - a[i]);
            }
        }
    }

    pub fn value(&self, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        self.at(t, out.as_mut_slice());
        out
    }

    /// CSV with header `t,y1,…,yp`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let nums = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number {f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if nums.len() < 2 {
                return Err(Error::InvalidInput("observation rows need a time and at least one value".into()));
            }
            times.push(nums[0]);
            samples.push(DVector::from_column_slice(&nums[1..]));
        }
        Self::new(times, samples)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("y{i}")));
        w.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![format_f64(*t)];
            row.extend(self.sample(k).iter().map(|v| format_f64(*v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}
