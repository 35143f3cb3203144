//! Run statistics: scalar counters and fixed-bin histograms collected from
//! a finished simulation, exported as labeled CSV rows.
//!
//! Each record is one statistic of one module. Scalars carry their value in
//! the `value` column; histograms carry bin counts, moments, and range
//! bookkeeping in the remaining columns. Rows are sorted so that within a
//! module the scalar rows precede the histogram rows — downstream
//! forward-filling then lets histogram rows inherit the module's most
//! recently seen scalar value.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::sim::{NodeKind, ScenarioConfig, SimError, Topology, TraceLog};

/// Number of equal-width bins in every histogram.
pub const NUM_BINS: usize = 20;

/// Errors from recording or serializing statistics.
#[derive(Debug, thiserror::Error)]
pub enum TelemetryError {
    /// A scalar or sample was not a finite number.
    #[error("non-finite value {value} for {module}.{name}")]
    NonFinite {
        module: String,
        name: String,
        value: f64,
    },
    /// A histogram was declared with an empty or inverted range.
    #[error("bad histogram range [{lo}, {hi}) for {module}.{name}")]
    BadRange {
        module: String,
        name: String,
        lo: f64,
        hi: f64,
    },
    /// The same histogram was redeclared with different parameters.
    #[error("histogram {module}.{name} redeclared with a different spec")]
    SpecMismatch { module: String, name: String },
    /// Reading or writing a CSV file failed.
    #[error("csv error for {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    /// Flushing an output file failed.
    #[error("io error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Rebuilding the topology for module naming failed.
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Whether a record is a single value or a distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    Scalar,
    Histogram,
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatKind::Scalar => f.write_str("scalar"),
            StatKind::Histogram => f.write_str("histogram"),
        }
    }
}

/// One exported row. Field order matches the CSV column order exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatRecord {
    pub sumweights: Option<f64>,
    #[serde(rename = "type")]
    pub kind: StatKind,
    pub module: String,
    pub name: String,
    pub attrname: Option<String>,
    pub attrvalue: Option<String>,
    pub value: Option<f64>,
    pub count: Option<u64>,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub underflows: Option<u64>,
    pub overflows: Option<u64>,
    /// `NUM_BINS + 1` space-separated bin boundaries.
    pub binedges: Option<String>,
    /// `NUM_BINS` space-separated occupancy counts.
    pub binvalues: Option<String>,
    pub label: u8,
}

/// Range and unit for one histogram. Samples below `lo` count as
/// underflows, samples at or above `hi` as overflows; both still
/// contribute to the moments and extrema.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistSpec {
    pub lo: f64,
    pub hi: f64,
    pub unit: &'static str,
}

/// Streaming histogram accumulator: fixed bins plus Welford moments.
#[derive(Clone, Debug)]
struct Hist {
    spec: HistSpec,
    bins: [u64; NUM_BINS],
    underflows: u64,
    overflows: u64,
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Hist {
    fn new(spec: HistSpec) -> Self {
        Self {
            spec,
            bins: [0; NUM_BINS],
            underflows: 0,
            overflows: 0,
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, x: f64) {
        if x < self.spec.lo {
            self.underflows += 1;
        } else if x >= self.spec.hi {
            self.overflows += 1;
        } else {
            let width = (self.spec.hi - self.spec.lo) / NUM_BINS as f64;
            let idx = (((x - self.spec.lo) / width) as usize).min(NUM_BINS - 1);
            self.bins[idx] += 1;
        }
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// Sample standard deviation (n - 1 denominator); zero below two samples.
    fn stddev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }

    fn binedges(&self) -> String {
        let width = (self.spec.hi - self.spec.lo) / NUM_BINS as f64;
        let mut out = String::new();
        for i in 0..=NUM_BINS {
            if i > 0 {
                out.push(' ');
            }
            // The last edge is written exactly to avoid drift from
            // accumulated rounding.
            let edge = if i == NUM_BINS {
                self.spec.hi
            } else {
                self.spec.lo + width * i as f64
            };
            out.push_str(&format!("{edge}"));
        }
        out
    }

    fn binvalues(&self) -> String {
        self.bins
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Collects statistics during or after a run and freezes them into rows.
#[derive(Debug, Default)]
pub struct StatRegistry {
    scalars: BTreeMap<(String, String), f64>,
    hists: BTreeMap<(String, String), Hist>,
}

impl StatRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Set a scalar; recording the same statistic twice keeps the newest
    /// value. Non-finite values are rejected.
    pub fn record_scalar(
        &mut self,
        module: &str,
        name: &str,
        value: f64,
    ) -> Result<(), TelemetryError> {
        if !value.is_finite() {
            return Err(TelemetryError::NonFinite {
                module: module.to_owned(),
                name: name.to_owned(),
                value,
            });
        }
        self.scalars
            .insert((module.to_owned(), name.to_owned()), value);
        Ok(())
    }

    /// Add one observation to a histogram, creating it on first touch.
    /// Every later call must use the same spec.
    pub fn record_sample(
        &mut self,
        module: &str,
        name: &str,
        spec: HistSpec,
        value: f64,
    ) -> Result<(), TelemetryError> {
        if !value.is_finite() {
            return Err(TelemetryError::NonFinite {
                module: module.to_owned(),
                name: name.to_owned(),
                value,
            });
        }
        if spec.lo >= spec.hi || !spec.lo.is_finite() || !spec.hi.is_finite() {
            return Err(TelemetryError::BadRange {
                module: module.to_owned(),
                name: name.to_owned(),
                lo: spec.lo,
                hi: spec.hi,
            });
        }
        let key = (module.to_owned(), name.to_owned());
        let hist = self.hists.entry(key).or_insert_with(|| Hist::new(spec));
        if hist.spec != spec {
            return Err(TelemetryError::SpecMismatch {
                module: module.to_owned(),
                name: name.to_owned(),
            });
        }
        hist.record(value);
        Ok(())
    }

    /// Freeze into rows, all tagged with `label`, sorted by module
    /// ascending, then kind descending (scalars before histograms), then
    /// name ascending.
    pub fn finalize(&self, label: u8) -> Vec<StatRecord> {
        let mut rows = Vec::with_capacity(self.scalars.len() + self.hists.len());
        for ((module, name), &value) in &self.scalars {
            rows.push(StatRecord {
                sumweights: None,
                kind: StatKind::Scalar,
                module: module.clone(),
                name: name.clone(),
                attrname: None,
                attrvalue: None,
                value: Some(value),
                count: None,
                mean: None,
                stddev: None,
                min: None,
                max: None,
                underflows: None,
                overflows: None,
                binedges: None,
                binvalues: None,
                label,
            });
        }
        for ((module, name), hist) in &self.hists {
            rows.push(StatRecord {
                sumweights: Some(hist.count as f64),
                kind: StatKind::Histogram,
                module: module.clone(),
                name: name.clone(),
                attrname: Some("unit".to_owned()),
                attrvalue: Some(hist.spec.unit.to_owned()),
                value: None,
                count: Some(hist.count),
                mean: Some(hist.mean),
                stddev: Some(hist.stddev()),
                min: Some(hist.min),
                max: Some(hist.max),
                underflows: Some(hist.underflows),
                overflows: Some(hist.overflows),
                binedges: Some(hist.binedges()),
                binvalues: Some(hist.binvalues()),
                label,
            });
        }
        rows.sort_by(|a, b| {
            a.module
                .cmp(&b.module)
                .then_with(|| b.kind.to_string().cmp(&a.kind.to_string()))
                .then_with(|| a.name.cmp(&b.name))
        });
        rows
    }
}

/// Histogram range for round-trip times, in seconds.
const RTT_SPEC: HistSpec = HistSpec {
    lo: 0.0,
    hi: 1.0,
    unit: "s",
};

/// Turn a finished run into labeled statistic rows.
///
/// Only modules the traffic actually touched are reported:
///
/// * `net.ue[i].app` — `packetsReceived` always, `numLost` when pings went
///   unanswered, and an `rtt` histogram when at least one ping completed.
/// * `net.gnb.queue[ue[i]]` — `forwardedPackets`, `droppedPackets` when
///   nonzero, and a `queueLength` histogram, for every touched radio queue.
/// * `net.host[j].queue[router]`, `net.router.queue[core]`,
///   `net.core.queue[gnb]` — a `queueLength` histogram when touched.
pub fn collect(
    trace: &TraceLog,
    config: &ScenarioConfig,
) -> Result<Vec<StatRecord>, TelemetryError> {
    let topo = Topology::build(config)?;
    let mut reg = StatRegistry::new();

    for (i, app) in trace.ue_apps.iter().enumerate() {
        let module = format!("net.ue[{i}].app");
        reg.record_scalar(&module, "packetsReceived", app.packets_received as f64)?;
        let lost = app.num_lost();
        if lost > 0 {
            reg.record_scalar(&module, "numLost", lost as f64)?;
        }
        for &rtt in &app.rtts {
            reg.record_sample(&module, "rtt", RTT_SPEC, rtt)?;
        }
    }

    for (dir, q) in trace.queues.iter().enumerate() {
        if !q.touched() {
            continue;
        }
        let (from, to) = topo.dir_endpoints(dir);
        let reported = match (topo.kind(from), topo.kind(to)) {
            // Radio downlink queues: the congestion point under flooding.
            (NodeKind::GNodeB, NodeKind::Ue) => true,
            // The flood path through the wired segment.
            (NodeKind::Host, NodeKind::Router) => true,
            (NodeKind::Router, NodeKind::Core) => true,
            (NodeKind::Core, NodeKind::GNodeB) => true,
            _ => false,
        };
        if !reported {
            continue;
        }
        let module = format!("net.{}.queue[{}]", topo.node_name(from), topo.node_name(to));
        let full = topo.kind(from) == NodeKind::GNodeB;
        if full {
            reg.record_scalar(&module, "forwardedPackets", q.forwarded as f64)?;
            if q.dropped > 0 {
                reg.record_scalar(&module, "droppedPackets", q.dropped as f64)?;
            }
        }
        let spec = HistSpec {
            lo: 0.0,
            hi: topo.dir_params(dir).queue_capacity_pkts as f64,
            unit: "pkts",
        };
        for &occupancy in &q.samples {
            reg.record_sample(&module, "queueLength", spec, f64::from(occupancy))?;
        }
    }

    Ok(reg.finalize(trace.scenario.label()))
}

/// The exact column header every exported CSV carries.
pub const CSV_HEADER: &str = "sumweights,type,module,name,attrname,attrvalue,value,count,mean,\
                              stddev,min,max,underflows,overflows,binedges,binvalues,label";

/// Write rows to `path`, one header line plus one line per record.
pub fn write_csv(path: &Path, rows: &[StatRecord]) -> Result<(), TelemetryError> {
    let wrap = |source: csv::Error| TelemetryError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(wrap)?;
    for row in rows {
        writer.serialize(row).map_err(wrap)?;
    }
    writer.flush().map_err(|source| TelemetryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// Read rows written by [`write_csv`]; numeric fields parse back exactly.
pub fn read_csv(path: &Path) -> Result<Vec<StatRecord>, TelemetryError> {
    let wrap = |source: csv::Error| TelemetryError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(wrap)?;
    reader.deserialize().map(|row| row.map_err(wrap)).collect()
}
