use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{CohortDataset, CohortError, ItemSchema, ParticipantRecord};

/// Demographic columns preceding the item scores.
pub const COHORT_PREFIX_COLUMNS: [&str; 7] =
    ["participant_id", "gender", "age", "living", "duration", "previous_falls", "hy"];

/// Outcome columns following the item scores.
pub const COHORT_SUFFIX_COLUMNS: [&str; 2] = ["fell_6m", "fell_12m"];

pub fn load_cohort(path: impl AsRef<Path>, schema: &ItemSchema) -> Result<CohortDataset, CohortError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CohortError::Io(format!("{}: {e}", path.display())))?;
    read_cohort(file, schema)
}

/// Reads a cohort CSV. Extra columns are ignored; rows are numbered from 1 (first data row).
pub fn read_cohort<R: Read>(reader: R, schema: &ItemSchema) -> Result<CohortDataset, CohortError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(CohortError::EmptyFile),
        Err(e) => return Err(CohortError::Csv(e.to_string())),
    };
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let item_columns: Vec<(u8, String)> = schema.items().iter().map(|it| (it.id, it.column())).collect();
    let required = COHORT_PREFIX_COLUMNS
        .iter()
        .map(|c| c.to_string())
        .chain(item_columns.iter().map(|(_, c)| c.clone()))
        .chain(COHORT_SUFFIX_COLUMNS.iter().map(|c| c.to_string()));
    let mut col = HashMap::new();
    for name in required {
        match index.get(name.as_str()) {
            Some(&i) => {
                col.insert(name, i);
            }
            None => return Err(CohortError::MissingColumn(name)),
        }
    }

    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CohortError::Csv(format!("row {row}: {e}")))?;
        let field = |name: &str| rec.get(col[name]).unwrap_or("");
        let invalid =
            |name: &str| CohortError::InvalidValue { column: name.to_string(), row, value: field(name).to_string() };
        let real = |name: &str| -> Result<f64, CohortError> {
            field(name).parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| invalid(name))
        };
        let flag = |name: &str| match field(name) {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(invalid(name)),
        };

        let participant_id = field("participant_id").to_string();
        if participant_id.is_empty() {
            return Err(invalid("participant_id"));
        }
        let mut item_scores = BTreeMap::new();
        for (id, name) in &item_columns {
            let raw: i64 = field(name).parse().map_err(|_| invalid(name))?;
            let def = schema.get(*id).expect("column derived from schema");
            if !def.contains(raw) {
                return Err(CohortError::OutOfRangeScore { item_id: *id, row });
            }
            item_scores.insert(*id, raw as u8);
        }
        records.push(ParticipantRecord {
            participant_id,
            gender: field("gender").parse().map_err(|_| invalid("gender"))?,
            age_years: real("age")?,
            living: field("living").parse().map_err(|_| invalid("living"))?,
            duration_years: real("duration")?,
            previous_falls: field("previous_falls").parse().map_err(|_| invalid("previous_falls"))?,
            hy_score: real("hy")?,
            item_scores,
            fell_6m: flag("fell_6m")?,
            fell_12m: flag("fell_12m")?,
        });
    }
    if records.is_empty() {
        return Err(CohortError::EmptyFile);
    }
    CohortDataset::new(schema.clone(), records)
}

/// Writes the dataset in the same column layout `read_cohort` expects.
pub fn write_cohort<W: Write>(dataset: &CohortDataset, writer: W) -> Result<(), CohortError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| CohortError::Csv(e.to_string());
    let items = dataset.schema().items();
    let header: Vec<String> = COHORT_PREFIX_COLUMNS
        .iter()
        .map(|c| c.to_string())
        .chain(items.iter().map(|it| it.column()))
        .chain(COHORT_SUFFIX_COLUMNS.iter().map(|c| c.to_string()))
        .collect();
    wtr.write_record(&header).map_err(csv_err)?;
    for rec in dataset.records() {
        let mut fields = vec![
            rec.participant_id.clone(),
            rec.gender.to_string(),
            rec.age_years.to_string(),
            rec.living.to_string(),
            rec.duration_years.to_string(),
            rec.previous_falls.to_string(),
            rec.hy_score.to_string(),
        ];
        fields.extend(items.iter().map(|it| rec.item_scores[&it.id].to_string()));
        fields.push(u8::from(rec.fell_6m).to_string());
        fields.push(u8::from(rec.fell_12m).to_string());
        wtr.write_record(&fields).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| CohortError::Io(e.to_string()))
}
