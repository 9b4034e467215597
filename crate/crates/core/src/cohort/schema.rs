use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use super::CohortError;

/// The four parts of the rating scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Part {
    I,
    II,
    III,
    IV,
}

impl Part {
    pub const ALL: [Part; 4] = [Part::I, Part::II, Part::III, Part::IV];

    pub fn index(self) -> usize {
        match self {
            Part::I => 0,
            Part::II => 1,
            Part::III => 2,
            Part::IV => 3,
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Part::I => "I",
            Part::II => "II",
            Part::III => "III",
            Part::IV => "IV",
        })
    }
}

impl FromStr for Part {
    type Err = CohortError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "I" | "1" => Ok(Part::I),
            "II" | "2" => Ok(Part::II),
            "III" | "3" => Ok(Part::III),
            "IV" | "4" => Ok(Part::IV),
            other => Err(CohortError::InvalidSchema(format!("unknown part {other:?}"))),
        }
    }
}

/// One scored item of the instrument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemDef {
    pub id: u8,
    pub part: Part,
    pub name: String,
    pub min_score: u8,
    pub max_score: u8,
}

impl ItemDef {
    pub fn new(id: u8, part: Part, name: &str, min_score: u8, max_score: u8) -> Self {
        ItemDef { id, part, name: name.to_string(), min_score, max_score }
    }

    /// CSV column holding this item's score.
    pub fn column(&self) -> String {
        item_column(self.id)
    }

    pub fn contains(&self, score: i64) -> bool {
        score >= i64::from(self.min_score) && score <= i64::from(self.max_score)
    }
}

pub fn item_column(id: u8) -> String {
    format!("item_{id}")
}

// Standard 42-item layout. Part IV items 32-35 and 39 are graded 0-4, the rest are yes/no.
const REFERENCE_ITEMS: [(u8, Part, &str, u8); 42] = [
    (1, Part::I, "Intellectual impairment", 4),
    (2, Part::I, "Thought disorder", 4),
    (3, Part::I, "Depression", 4),
    (4, Part::I, "Motivation/initiative", 4),
    (5, Part::II, "Speech", 4),
    (6, Part::II, "Salivation", 4),
    (7, Part::II, "Swallowing", 4),
    (8, Part::II, "Handwriting", 4),
    (9, Part::II, "Cutting food", 4),
    (10, Part::II, "Dressing", 4),
    (11, Part::II, "Hygiene", 4),
    (12, Part::II, "Turning in bed", 4),
    (13, Part::II, "Falling (unrelated to freezing)", 4),
    (14, Part::II, "Freezing when walking", 4),
    (15, Part::II, "Walking", 4),
    (16, Part::II, "Tremor", 4),
    (17, Part::II, "Sensory complaints", 4),
    (18, Part::III, "Speech (motor)", 4),
    (19, Part::III, "Facial expression", 4),
    (20, Part::III, "Tremor at rest", 4),
    (21, Part::III, "Action or postural tremor", 4),
    (22, Part::III, "Rigidity", 4),
    (23, Part::III, "Finger taps", 4),
    (24, Part::III, "Hand movements", 4),
    (25, Part::III, "Hand pronate/supinate", 4),
    (26, Part::III, "Leg agility", 4),
    (27, Part::III, "Arising from chair", 4),
    (28, Part::III, "Posture", 4),
    (29, Part::III, "Gait", 4),
    (30, Part::III, "Postural stability", 4),
    (31, Part::III, "Body bradykinesia", 4),
    (32, Part::IV, "Dyskinesia duration", 4),
    (33, Part::IV, "Dyskinesia disability", 4),
    (34, Part::IV, "Painful dyskinesia", 4),
    (35, Part::IV, "Early morning dystonia", 4),
    (36, Part::IV, "Predictable off periods", 1),
    (37, Part::IV, "Unpredictable off periods", 1),
    (38, Part::IV, "Sudden off periods", 1),
    (39, Part::IV, "Proportion of day off", 4),
    (40, Part::IV, "Anorexia, nausea, vomiting", 1),
    (41, Part::IV, "Sleep disturbance", 1),
    (42, Part::IV, "Symptomatic orthostasis", 1),
];

/// Validated, ordered list of item definitions.
///
/// Items are kept sorted by id and each part occupies one contiguous id range, in part
/// order. Scores are bounded to `0..=4` with `min_score < max_score`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemSchema {
    items: Vec<ItemDef>,
}

impl ItemSchema {
    pub fn new(mut items: Vec<ItemDef>) -> Result<Self, CohortError> {
        if items.is_empty() {
            return Err(CohortError::InvalidSchema("schema has no items".into()));
        }
        items.sort_by_key(|item| item.id);
        let mut seen = HashSet::new();
        for item in &items {
            if item.id == 0 {
                return Err(CohortError::InvalidSchema("item ids start at 1".into()));
            }
            if !seen.insert(item.id) {
                return Err(CohortError::InvalidSchema(format!("duplicate item id {}", item.id)));
            }
            if item.max_score > 4 || item.min_score >= item.max_score {
                return Err(CohortError::InvalidSchema(format!(
                    "item {} has score range {}..={}",
                    item.id, item.min_score, item.max_score
                )));
            }
        }
        // Sorted by id, parts must then be non-decreasing for the ranges to be contiguous.
        for pair in items.windows(2) {
            if pair[1].part < pair[0].part {
                return Err(CohortError::InvalidSchema(format!(
                    "item {} (part {}) follows item {} (part {}); parts must occupy contiguous id ranges",
                    pair[1].id, pair[1].part, pair[0].id, pair[0].part
                )));
            }
        }
        Ok(ItemSchema { items })
    }

    /// The standard layout: I 1-4, II 5-17, III 18-31, IV 32-42.
    pub fn reference() -> Self {
        let items = REFERENCE_ITEMS.iter().map(|&(id, part, name, max)| ItemDef::new(id, part, name, 0, max)).collect();
        ItemSchema::new(items).expect("reference schema is valid")
    }

    /// Parses a schema override: header `id,part,name,min_score,max_score`, one item per row.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, CohortError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut items = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| CohortError::InvalidSchema(e.to_string()))?;
            if rec.len() != 5 {
                return Err(CohortError::InvalidSchema(format!(
                    "schema row {} has {} fields, expected 5",
                    i + 1,
                    rec.len()
                )));
            }
            let num = |k: usize| {
                rec[k]
                    .parse::<u8>()
                    .map_err(|_| CohortError::InvalidSchema(format!("schema row {}: bad number {:?}", i + 1, &rec[k])))
            };
            items.push(ItemDef::new(num(0)?, rec[1].parse()?, &rec[2], num(3)?, num(4)?));
        }
        ItemSchema::new(items)
    }

    pub fn items(&self) -> &[ItemDef] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: u8) -> Option<&ItemDef> {
        self.items.binary_search_by_key(&id, |item| item.id).ok().map(|i| &self.items[i])
    }

    pub fn part_ids(&self, part: Part) -> Vec<u8> {
        self.items.iter().filter(|it| it.part == part).map(|it| it.id).collect()
    }

    pub fn ids(&self) -> Vec<u8> {
        self.items.iter().map(|it| it.id).collect()
    }
}
