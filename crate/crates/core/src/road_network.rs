//! Road-segment graph: nodes are one-way road segments, and `u -> v` is an
//! edge whenever `u` ends at the intersection where `v` starts.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Urban or rural speed profile for the category speed table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    #[default]
    Urban,
    Rural,
}

impl Setting {
    /// Default speed (mph) of a road category in this setting.
    ///
    /// | cat | road type                 | urban | rural |
    /// |-----|---------------------------|-------|-------|
    /// | 1   | motorway                  | 60    | 70    |
    /// | 2   | trunk                     | 45    | 55    |
    /// | 3   | primary                   | 30    | 50    |
    /// | 4   | secondary                 | 20    | 45    |
    /// | 5   | tertiary                  | 15    | 35    |
    /// | 6   | residential/unclassified  | 8     | 25    |
    /// | 7   | service                   | 5     | 10    |
    /// | 8   | living street             | 5     | 10    |
    pub fn category_speed(self, category: u8) -> Option<f64> {
        const URBAN: [f64; 8] = [60.0, 45.0, 30.0, 20.0, 15.0, 8.0, 5.0, 5.0];
        const RURAL: [f64; 8] = [70.0, 55.0, 50.0, 45.0, 35.0, 25.0, 10.0, 10.0];
        let idx = usize::from(category).checked_sub(1)?;
        match self {
            Setting::Urban => URBAN.get(idx).copied(),
            Setting::Rural => RURAL.get(idx).copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub id: String,
    /// Miles.
    pub length: f64,
    pub category: u8,
    /// Miles per hour.
    pub speed: f64,
    /// Installation cost of a WCL on this segment.
    pub cost: f64,
    pub start: String,
    pub end: String,
}

impl RoadSegment {
    /// Average traversal time in hours.
    pub fn traversal_time(&self) -> f64 {
        self.length / self.speed
    }
}

/// Traversal time of `seg` in hours.
pub fn traversal_time(seg: &RoadSegment) -> f64 {
    seg.traversal_time()
}

/// One row of the network interchange format (JSON object or CSV record).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub id: String,
    pub length_mi: f64,
    pub category: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_mph: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    pub start: String,
    pub end: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(default)]
    pub setting: Setting,
    pub segments: Vec<SegmentRecord>,
}

/// Immutable road-segment graph. Segments are stored sorted by id, so a
/// segment's index doubles as its rank in lexicographic id order.
#[derive(Debug, Clone)]
pub struct SegmentGraph {
    setting: Setting,
    segments: Vec<RoadSegment>,
    index: HashMap<String, usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl SegmentGraph {
    pub fn new(setting: Setting, mut segments: Vec<RoadSegment>) -> Result<Self> {
        segments.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(segments.len());
        for (i, seg) in segments.iter().enumerate() {
            validate_segment(seg)?;
            if index.insert(seg.id.clone(), i).is_some() {
                return Err(Error::DuplicateSegment(seg.id.clone()));
            }
        }

        let mut starting_at: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, seg) in segments.iter().enumerate() {
            starting_at.entry(seg.start.as_str()).or_default().push(i);
        }
        let mut out_edges = vec![Vec::new(); segments.len()];
        let mut in_edges = vec![Vec::new(); segments.len()];
        for (u, seg) in segments.iter().enumerate() {
            if let Some(next) = starting_at.get(seg.end.as_str()) {
                for &v in next {
                    out_edges[u].push(v);
                    in_edges[v].push(u);
                }
            }
        }
        // `starting_at` lists are built in index order, so out lists are
        // already sorted; in lists are filled in u order and sorted as well.
        Ok(Self {
            setting,
            segments,
            index,
            out_edges,
            in_edges,
        })
    }

    pub fn from_records(setting: Setting, records: Vec<SegmentRecord>) -> Result<Self> {
        let segments = records
            .into_iter()
            .map(|r| record_to_segment(setting, r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(setting, segments)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        Self::from_records(file.setting, file.segments)
    }

    /// Reads the CSV flavour: header row with the JSON field names.
    pub fn from_csv_reader<R: Read>(reader: R, setting: Setting) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut records = Vec::new();
        for row in rdr.deserialize() {
            records.push(row?);
        }
        Self::from_records(setting, records)
    }

    pub fn to_network_file(&self) -> NetworkFile {
        NetworkFile {
            setting: self.setting,
            segments: self
                .segments
                .iter()
                .map(|s| SegmentRecord {
                    id: s.id.clone(),
                    length_mi: s.length,
                    category: i64::from(s.category),
                    speed_mph: Some(s.speed),
                    cost: Some(s.cost),
                    start: s.start.clone(),
                    end: s.end.clone(),
                })
                .collect(),
        }
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segments(&self) -> &[RoadSegment] {
        &self.segments
    }

    pub fn segment(&self, idx: usize) -> &RoadSegment {
        &self.segments[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownSegment(id.to_owned()))
    }

    /// Successors of `u`, ascending by index.
    pub fn successors(&self, u: usize) -> &[usize] {
        &self.out_edges[u]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out_edges[u].binary_search(&v).is_ok()
    }

    /// Weight of edge `(u, v)`: the traversal time of `u` in hours.
    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        self.has_edge(u, v)
            .then(|| self.segments[u].traversal_time())
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    /// All directed edges in (u, v) index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    /// T: sum of segment lengths, accumulated in id order.
    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn total_cost(&self) -> f64 {
        self.segments.iter().map(|s| s.cost).sum()
    }

    /// B = beta * total installation cost.
    pub fn budget_from_fraction(&self, beta: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParams(format!("beta {beta} outside [0, 1]")));
        }
        Ok(beta * self.total_cost())
    }

    /// Induced subgraph on segments of category `<= max_category`.
    pub fn filter_categories(&self, max_category: u8) -> Result<Self> {
        if !(1..=8).contains(&max_category) {
            return Err(Error::InvalidParams(format!(
                "max_category {max_category} outside 1..=8"
            )));
        }
        let kept = self
            .segments
            .iter()
            .filter(|s| s.category <= max_category)
            .cloned()
            .collect();
        Self::new(self.setting, kept)
    }

    /// Copy of the graph with per-segment speeds replaced.
    pub fn with_speeds(&self, speeds: &[f64]) -> Result<Self> {
        assert_eq!(speeds.len(), self.len(), "one speed per segment");
        let mut g = self.clone();
        for (seg, &v) in g.segments.iter_mut().zip(speeds) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveSpeed {
                    id: seg.id.clone(),
                    speed: v,
                });
            }
            seg.speed = v;
        }
        Ok(g)
    }

    /// Copy with every length (and length-derived default cost) multiplied by `factor`.
    pub fn scale_lengths(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParams(format!("length factor {factor}")));
        }
        let mut g = self.clone();
        for seg in &mut g.segments {
            seg.length *= factor;
            seg.cost *= factor;
        }
        Ok(g)
    }
}

fn record_to_segment(setting: Setting, r: SegmentRecord) -> Result<RoadSegment> {
    if !(1..=8).contains(&r.category) {
        return Err(Error::BadCategory {
            id: r.id,
            category: r.category,
        });
    }
    let category = r.category as u8;
    let speed = match r.speed_mph {
        Some(v) => v,
        None => setting
            .category_speed(category)
            .expect("category already range-checked"),
    };
    Ok(RoadSegment {
        cost: r.cost.unwrap_or(r.length_mi),
        length: r.length_mi,
        category,
        speed,
        start: r.start,
        end: r.end,
        id: r.id,
    })
}

fn validate_segment(seg: &RoadSegment) -> Result<()> {
    if !(1..=8).contains(&seg.category) {
        return Err(Error::BadCategory {
            id: seg.id.clone(),
            category: i64::from(seg.category),
        });
    }
    if !(seg.length > 0.0 && seg.length.is_finite()) {
        return Err(Error::NonPositiveLength {
            id: seg.id.clone(),
            length: seg.length,
        });
    }
    if !(seg.speed > 0.0 && seg.speed.is_finite()) {
        return Err(Error::NonPositiveSpeed {
            id: seg.id.clone(),
            speed: seg.speed,
        });
    }
    if !(seg.cost >= 0.0 && seg.cost.is_finite()) {
        return Err(Error::NegativeCost {
            id: seg.id.clone(),
            cost: seg.cost,
        });
    }
    if seg.start.trim().is_empty() || seg.end.trim().is_empty() {
        return Err(Error::DanglingIntersection { id: seg.id.clone() });
    }
    Ok(())
}

/// Loads a network file. `.csv` files are read as CSV in the given
/// setting; anything else is parsed as the JSON schema (whose own
/// `setting` field wins).
pub fn load_network(path: impl AsRef<Path>, csv_setting: Setting) -> Result<SegmentGraph> {
    let path = path.as_ref();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    if is_csv {
        SegmentGraph::from_csv_reader(std::io::BufReader::new(file), csv_setting)
    } else {
        let mut text = String::new();
        std::io::BufReader::new(file)
            .read_to_string(&mut text)
            .map_err(|e| Error::io(path, e))?;
        SegmentGraph::from_json_str(&text)
    }
}

/// Per-category segment counts, handy for summaries.
pub fn category_histogram(g: &SegmentGraph) -> BTreeMap<u8, usize> {
    let mut h = BTreeMap::new();
    for s in g.segments() {
        *h.entry(s.category).or_insert(0) += 1;
    }
    h
}
