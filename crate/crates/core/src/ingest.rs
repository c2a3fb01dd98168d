//! Event-stream files and conversion of raw contact lists.
//!
//! An event-stream file is line-oriented UTF-8:
//!
//! ```text
//! #format=1
//! #T=10
//! #seed=42
//! #spec={...}
//! 0.31250000000000000\t0,1\t0-1
//! 1.5\t2\t0-2,1-2
//! 2.25\t-\t-
//! ```
//!
//! Header lines are `#key=value`. Each body line is `time<TAB>nodes<TAB>edges`
//! where `nodes` is a comma-separated list of node ids and `edges` a list of
//! `u-v` pairs with `u < v`; `-` stands for an empty list. Times carry 17
//! significant digits, so writing and reading back is bit-exact.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::dynet::{DynamicNetwork, Edge, EventRecord, Mark, NetworkError, NodeId};
use crate::kernel::MIN_SEPARATION;
use crate::markmodel::NodeAux;
use crate::process::{ModelSpec, Realization};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: time {time} does not follow {last}")]
    NonMonotoneTime { line: usize, time: f64, last: f64 },
    #[error("line {line}: {source}")]
    Network { line: usize, source: NetworkError },
    #[error("no usable contact rows")]
    EmptyInput,
}

fn parse_err(line: usize, msg: impl Into<String>) -> IngestError {
    IngestError::Parse { line, msg: msg.into() }
}

/// Formats with 17 significant digits, `%.17g` style (trailing zeros dropped).
pub fn format_time(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mant), sign, exp.abs())
    } else {
        trim(&format!("{:.*}", (16 - exp) as usize, x))
    }
}

/// An event stream with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub horizon: f64,
    pub seed: Option<u64>,
    pub spec: Option<ModelSpec>,
    /// Further header entries, written in key order.
    pub meta: BTreeMap<String, String>,
    pub events: Vec<EventRecord>,
    pub aux: NodeAux,
}

impl EventStream {
    pub fn new(horizon: f64, events: Vec<EventRecord>) -> Self {
        EventStream { horizon, seed: None, spec: None, meta: BTreeMap::new(), events, aux: NodeAux::default() }
    }

    pub fn from_realization(r: &Realization) -> Self {
        let mut meta = BTreeMap::new();
        if r.clamp_events > 0 {
            meta.insert("clamp_events".into(), r.clamp_events.to_string());
        }
        EventStream {
            horizon: r.spec.horizon,
            seed: Some(r.seed),
            spec: Some(r.spec.clone()),
            meta,
            events: r.events.clone(),
            aux: r.aux.clone(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.time).collect()
    }

    pub fn network(&self) -> Result<DynamicNetwork, NetworkError> {
        DynamicNetwork::from_events(&self.events)
    }

    pub fn write_to<W: std::io::Write>(&self, mut sink: W) -> std::io::Result<()> {
        sink.write_all(write_events(self).as_bytes())
    }
}

fn join_or_dash<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    if items.is_empty() {
        "-".into()
    } else {
        items.iter().map(f).collect::<Vec<_>>().join(",")
    }
}

/// Serialises a stream to the file format.
pub fn write_events(s: &EventStream) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "#format={FORMAT_VERSION}");
    let _ = writeln!(out, "#T={}", format_time(s.horizon));
    if let Some(seed) = s.seed {
        let _ = writeln!(out, "#seed={seed}");
    }
    if let Some(spec) = &s.spec {
        let _ = writeln!(out, "#spec={}", spec.to_json());
    }
    for (k, v) in &s.meta {
        let _ = writeln!(out, "#{k}={v}");
    }
    if !s.aux.community.is_empty() {
        let _ = writeln!(out, "#aux.community={}", join_or_dash(&s.aux.community, |c| c.to_string()));
    }
    if !s.aux.position.is_empty() {
        let pts: Vec<String> = s
            .aux
            .position
            .iter()
            .map(|p| p.iter().map(|x| format_time(*x)).collect::<Vec<_>>().join(","))
            .collect();
        let _ = writeln!(out, "#aux.position={}", pts.join(";"));
    }
    for ev in &s.events {
        let nodes = join_or_dash(&ev.mark.new_nodes, |n| n.0.to_string());
        let edges = join_or_dash(&ev.mark.new_edges, |e| e.to_string());
        let _ = writeln!(out, "{}\t{}\t{}", format_time(ev.time), nodes, edges);
    }
    out
}

fn parse_f64(line: usize, s: &str, what: &str) -> Result<f64, IngestError> {
    let v: f64 = s.trim().parse().map_err(|_| parse_err(line, format!("bad {what} `{s}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what} must be finite")));
    }
    Ok(v)
}

fn parse_u32(line: usize, s: &str) -> Result<u32, IngestError> {
    s.trim().parse().map_err(|_| parse_err(line, format!("bad node id `{s}`")))
}

/// Parses a stream and replays it to check that every mark is a valid addition.
pub fn parse_events(text: &str) -> Result<EventStream, IngestError> {
    let mut horizon = None;
    let mut seed = None;
    let mut spec = None;
    let mut meta = BTreeMap::new();
    let mut aux = NodeAux::default();
    let mut events: Vec<EventRecord> = Vec::new();
    let mut net = DynamicNetwork::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(h) = raw.strip_prefix('#') {
            let Some((k, v)) = h.split_once('=') else {
                return Err(parse_err(line, "header lines are `#key=value`"));
            };
            match k {
                "format" => {
                    if v != FORMAT_VERSION {
                        return Err(parse_err(line, format!("unsupported format version `{v}`")));
                    }
                }
                "T" => horizon = Some(parse_f64(line, v, "horizon")?),
                "seed" => seed = Some(v.parse().map_err(|_| parse_err(line, format!("bad seed `{v}`")))?),
                "spec" => spec = Some(serde_json::from_str(v).map_err(|e| parse_err(line, format!("bad spec: {e}")))?),
                "aux.community" => {
                    aux.community = v
                        .split(',')
                        .map(|c| c.trim().parse().map_err(|_| parse_err(line, format!("bad community `{c}`"))))
                        .collect::<Result<_, _>>()?;
                }
                "aux.position" => {
                    aux.position = v
                        .split(';')
                        .map(|p| p.split(',').map(|x| parse_f64(line, x, "coordinate")).collect())
                        .collect::<Result<_, _>>()?;
                }
                _ => {
                    meta.insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(line, format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let time = parse_f64(line, fields[0], "time")?;
        let nodes = if fields[1] == "-" {
            Vec::new()
        } else {
            fields[1].split(',').map(|s| parse_u32(line, s).map(NodeId)).collect::<Result<_, _>>()?
        };
        let edges = if fields[2] == "-" {
            Vec::new()
        } else {
            fields[2]
                .split(',')
                .map(|s| {
                    let (a, b) = s.split_once('-').ok_or_else(|| parse_err(line, format!("bad edge `{s}`")))?;
                    let (a, b) = (parse_u32(line, a)?, parse_u32(line, b)?);
                    if a >= b {
                        return Err(parse_err(line, format!("edge `{s}` must be written u-v with u < v")));
                    }
                    Ok(Edge::between(a, b))
                })
                .collect::<Result<_, _>>()?
        };
        if let Some(last) = events.last() {
            if !(time - last.time >= MIN_SEPARATION) {
                return Err(IngestError::NonMonotoneTime { line, time, last: last.time });
            }
        }
        let mark = Mark::new(nodes, edges);
        net.apply_mark(time, &mark).map_err(|source| IngestError::Network { line, source })?;
        events.push(EventRecord::new(time, mark));
    }
    let horizon = horizon.ok_or_else(|| parse_err(0, "missing `#T=` header"))?;
    if let Some(last) = events.last() {
        if last.time > horizon {
            return Err(parse_err(0, format!("event at {} lies after T = {horizon}", last.time)));
        }
    }
    Ok(EventStream { horizon, seed, spec, meta, events, aux })
}

/// One raw contact: two identifiers seen together at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactRow {
    pub time: f64,
    pub i: String,
    pub j: String,
}

/// Parses whitespace-separated `t i j` rows; extra columns, blank lines and
/// `#` comments are ignored.
pub fn parse_contacts(text: &str) -> Result<Vec<ContactRow>, IngestError> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let mut it = s.split_whitespace();
        let (Some(t), Some(i), Some(j)) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(idx + 1, "expected `t i j`"));
        };
        rows.push(ContactRow { time: parse_f64(idx + 1, t, "time")?, i: i.to_string(), j: j.to_string() });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ConvertOptions {
    /// Map `[t_min, t_max]` affinely onto `[0, T]`.
    pub rescale_to: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conversion {
    pub stream: EventStream,
    /// `dictionary[label]` is the raw identifier of node `label`.
    pub dictionary: Vec<String>,
    pub repeats_dropped: usize,
    pub self_loops_skipped: usize,
    /// Converted time is `(raw - time_offset) * time_scale`.
    pub time_offset: f64,
    pub time_scale: f64,
}

impl Conversion {
    pub fn dictionary_tsv(&self) -> String {
        let mut out = String::from("label\traw_id\n");
        for (label, raw) in self.dictionary.iter().enumerate() {
            let _ = writeln!(out, "{label}\t{raw}");
        }
        out
    }
}

/// Integer ids sort numerically and before any other id; the rest sort as strings.
fn natural_key(s: &str) -> (u8, i128, &str) {
    match s.parse::<i128>() {
        Ok(n) => (0, n, s),
        Err(_) => (1, 0, s),
    }
}

/// Turns contacts into an event stream keeping first occurrences only.
///
/// All additions sharing a timestamp form one event; timestamps that add
/// nothing new are dropped. New identifiers at a timestamp get dense labels
/// in natural order, so converting the output's edge list again yields the
/// same stream.
pub fn contacts_to_events(rows: &[ContactRow], opts: &ConvertOptions) -> Result<Conversion, IngestError> {
    let mut usable: Vec<&ContactRow> = rows.iter().filter(|r| r.i != r.j).collect();
    let self_loops_skipped = rows.len() - usable.len();
    if usable.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    usable.sort_by(|a, b| a.time.total_cmp(&b.time));
    let t_min = usable[0].time;
    let t_max = usable[usable.len() - 1].time;
    let (time_offset, time_scale, horizon) = match opts.rescale_to {
        Some(target) => {
            if !(target > 0.0 && target.is_finite()) {
                return Err(parse_err(0, format!("rescale target must be > 0, got {target}")));
            }
            let scale = if t_max > t_min { target / (t_max - t_min) } else { 1.0 };
            (t_min, scale, target)
        }
        None => (0.0, 1.0, t_max),
    };
    let mut labels: HashMap<&str, u32> = HashMap::new();
    let mut dictionary = Vec::new();
    let mut seen: HashSet<Edge> = HashSet::new();
    let mut repeats_dropped = 0;
    let mut events: Vec<EventRecord> = Vec::new();
    let mut start = 0;
    while start < usable.len() {
        let t_raw = usable[start].time;
        let mut end = start;
        while end < usable.len() && usable[end].time == t_raw {
            end += 1;
        }
        let group = &usable[start..end];
        let mut fresh: Vec<&str> =
            group.iter().flat_map(|r| [r.i.as_str(), r.j.as_str()]).filter(|id| !labels.contains_key(id)).collect();
        fresh.sort_by_key(|s| natural_key(s));
        fresh.dedup();
        let new_nodes: Vec<NodeId> = fresh
            .iter()
            .map(|&id| {
                let label = dictionary.len() as u32;
                labels.insert(id, label);
                dictionary.push(id.to_string());
                NodeId(label)
            })
            .collect();
        let mut new_edges = Vec::new();
        for r in group {
            let e = Edge::between(labels[r.i.as_str()], labels[r.j.as_str()]);
            if seen.insert(e) {
                new_edges.push(e);
            } else {
                repeats_dropped += 1;
            }
        }
        let mark = Mark::new(new_nodes, new_edges);
        if !mark.is_empty() {
            let t = (t_raw - time_offset) * time_scale;
            if let Some(last) = events.last() {
                if !(t - last.time >= MIN_SEPARATION) {
                    return Err(IngestError::NonMonotoneTime { line: 0, time: t, last: last.time });
                }
            }
            if t < 0.0 {
                return Err(parse_err(0, format!("negative time {t}; rescale the stream")));
            }
            events.push(EventRecord::new(t, mark));
        }
        start = end;
    }
    let mut stream = EventStream::new(horizon, events);
    stream.meta.insert("source".into(), "contacts".into());
    stream.meta.insert("time_offset".into(), format_time(time_offset));
    stream.meta.insert("time_scale".into(), format_time(time_scale));
    stream.meta.insert("repeats_dropped".into(), repeats_dropped.to_string());
    stream.meta.insert("self_loops_skipped".into(), self_loops_skipped.to_string());
    Ok(Conversion { stream, dictionary, repeats_dropped, self_loops_skipped, time_offset, time_scale })
}

/// Edge list of a stream as contact rows (labels as identifiers).
pub fn stream_to_contacts(stream: &EventStream) -> Vec<ContactRow> {
    stream
        .events
        .iter()
        .flat_map(|ev| {
            ev.mark.new_edges.iter().map(move |e| ContactRow { time: ev.time, i: e.lo().0.to_string(), j: e.hi().0.to_string() })
        })
        .collect()
}
