//! Tick-data representation, refresh-time synchronization and random
//! sampling-time generation.
//!
//! Session time is normalized to \[0,1\]; one second is 1/23400 under the
//! default 6.5-hour session. Both series observe their first tick at time 0.
//!
//! The refresh times of two sampling designs (Sⁱ) and (Tʲ) are
//!
//! ```text
//! R⁰ = S⁰ ∨ T⁰,    Rᵏ = min{Sⁱ | Sⁱ > Rᵏ⁻¹} ∨ min{Tʲ | Tʲ > Rᵏ⁻¹},
//! ```
//!
//! and the next-tick interpolated designs follow as Ŝ⁰ = S⁰, T̂⁰ = T⁰,
//! Ŝᵏ = min{Sⁱ | Sⁱ > Rᵏ⁻¹}, T̂ᵏ = min{Tʲ | Tʲ > Rᵏ⁻¹}. The grid stops at
//! the last k for which both Ŝᵏ and T̂ᵏ exist.

use std::io::Read;
use std::path::Path;

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Seconds in the default trading session (6.5 hours).
pub const DEFAULT_SESSION_SECONDS: f64 = 23_400.0;

/// One asset's observation times and log-prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TickSeries {
    /// Build a series, enforcing the structural invariants: at least two
    /// ticks, strictly increasing times, first tick at time 0.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: "tick series times/values",
                expected: times.len(),
                actual: values.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::InvalidTickSeries(format!(
                "need at least 2 ticks, got {}",
                times.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidTickSeries(format!(
                "first tick must be at time 0, got {}",
                times[0]
            )));
        }
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidTickSeries(format!(
                    "times must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTickSeries("non-finite entry".into()));
        }
        Ok(TickSeries { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Last-tick interpolation: the value of the most recent tick at or
    /// before `t`. `t` must not precede the first tick.
    pub fn last_tick_value(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&s| s <= t);
        debug_assert!(idx > 0, "queried before the first tick");
        self.values[idx - 1]
    }
}

/// Synchronized sampling built from two tick series.
#[derive(Debug, Clone)]
pub struct RefreshGrid {
    /// Refresh times Rᵏ.
    pub r: Vec<f64>,
    /// Next-tick interpolated times Ŝᵏ of series 1.
    pub s_hat: Vec<f64>,
    /// Next-tick interpolated times T̂ᵏ of series 2.
    pub t_hat: Vec<f64>,
    /// Indices into series 1 underlying Ŝᵏ.
    pub s_hat_idx: Vec<usize>,
    /// Indices into series 2 underlying T̂ᵏ.
    pub t_hat_idx: Vec<usize>,
}

impl RefreshGrid {
    /// Number of grid entries (refresh times, counting R⁰).
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Refresh-time synchronization with next-tick interpolation.
pub fn refresh_grid(a: &TickSeries, b: &TickSeries) -> Result<RefreshGrid> {
    let s = a.times();
    let t = b.times();

    let mut r = Vec::new();
    let mut s_hat = Vec::new();
    let mut t_hat = Vec::new();
    let mut s_hat_idx = Vec::new();
    let mut t_hat_idx = Vec::new();

    // R⁰ anchors on the first observations.
    r.push(s[0].max(t[0]));
    s_hat.push(s[0]);
    t_hat.push(t[0]);
    s_hat_idx.push(0);
    t_hat_idx.push(0);

    let mut i = 0; // candidate index into s for the next Ŝ
    let mut j = 0;
    loop {
        let prev = *r.last().unwrap();
        while i < s.len() && s[i] <= prev {
            i += 1;
        }
        while j < t.len() && t[j] <= prev {
            j += 1;
        }
        if i >= s.len() || j >= t.len() {
            break;
        }
        s_hat.push(s[i]);
        t_hat.push(t[j]);
        s_hat_idx.push(i);
        t_hat_idx.push(j);
        r.push(s[i].max(t[j]));
    }

    if r.len() < 2 {
        return Err(Error::EmptyOverlap);
    }
    Ok(RefreshGrid {
        r,
        s_hat,
        t_hat,
        s_hat_idx,
        t_hat_idx,
    })
}

/// Random sampling times on the grid {0, 1/n, ..., 1}.
///
/// Exponential inter-arrivals with mean `lambda/n` are rounded up to the
/// next grid point, which both collapses duplicates and keeps the times
/// strictly increasing. Time 0 is always included.
pub fn poisson_sample_times(n: usize, lambda: f64, rng: &mut Stream) -> Vec<f64> {
    assert!(n >= 1, "grid size must be positive");
    assert!(lambda > 0.0, "intensity parameter must be positive");
    let exp = Exp::new(n as f64 / lambda).expect("positive rate");
    let mut times = vec![0.0];
    let mut t = 0.0f64;
    let mut cell = 0usize; // index of the last included grid point
    loop {
        t += exp.sample(rng);
        if t > 1.0 {
            break;
        }
        let next = (t * n as f64).ceil() as usize;
        if next > cell {
            cell = next.min(n);
            times.push(cell as f64 / n as f64);
            if cell == n {
                break;
            }
        }
    }
    times
}

/// Options for CSV tick ingestion.
#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Session length used to normalize the `time` column to \[0,1\].
    pub session_seconds: f64,
    /// Take the natural log of the `price` column (set false when the file
    /// already holds log-prices).
    pub log_prices: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            session_seconds: DEFAULT_SESSION_SECONDS,
            log_prices: true,
        }
    }
}

/// Read a `time,price` CSV (time in seconds from session open).
pub fn read_ticks_csv(path: &Path, opts: &IngestOptions) -> Result<TickSeries> {
    let file = std::fs::File::open(path)?;
    read_ticks(file, opts)
}

/// Same as [`read_ticks_csv`] on any reader.
pub fn read_ticks<R: Read>(reader: R, opts: &IngestOptions) -> Result<TickSeries> {
    #[derive(Deserialize)]
    struct Row {
        time: f64,
        price: f64,
    }
    let mut rdr = csv::Reader::from_reader(reader);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        times.push(row.time / opts.session_seconds);
        values.push(if opts.log_prices {
            row.price.ln()
        } else {
            row.price
        });
    }
    TickSeries::new(times, values)
}

/// Write a series as a `time,price` CSV, undoing the ingestion transforms.
pub fn write_ticks_csv(path: &Path, series: &TickSeries, opts: &IngestOptions) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["time", "price"])?;
    for (t, v) in series.times().iter().zip(series.values()) {
        let price = if opts.log_prices { v.exp() } else { *v };
        wtr.write_record([format!("{}", t * opts.session_seconds), format!("{price}")])?;
    }
    wtr.flush()?;
    Ok(())
}
