//! Parsers turning raw datasets into behavior records.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use phogad_core::features::FlowRecord;
use phogad_core::Label;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

/// Column roles of a flow CSV.
///
/// Features are laid out as the `numeric` columns in the listed order,
/// followed by one one-hot block per `categorical` column in column-name
/// order. A categorical value outside its vocabulary gives an all-zero block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub key_a: String,
    pub key_b: String,
    pub label: String,
    /// Label cell values that mark a row anomalous; every other value is normal.
    pub anomaly_values: Vec<String>,
    #[serde(default)]
    pub numeric: Vec<String>,
    #[serde(default)]
    pub categorical: BTreeMap<String, Vec<String>>,
}

impl Schema {
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = self.numeric.clone();
        for (col, vocab) in &self.categorical {
            names.extend(vocab.iter().map(|v| format!("{col}={v}")));
        }
        names
    }
}

fn column(path: &Path, header: &csv::StringRecord, name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
}

/// One record per data row, in file order. Rows are numbered from 1 after
/// the header in errors.
pub fn parse_flow_csv(path: &Path, schema: &Schema) -> Result<Vec<FlowRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).at(path)?;
    let header = reader.headers().at(path)?.clone();
    let key_a = column(path, &header, &schema.key_a)?;
    let key_b = column(path, &header, &schema.key_b)?;
    let label = column(path, &header, &schema.label)?;
    let numeric = schema
        .numeric
        .iter()
        .map(|c| column(path, &header, c))
        .collect::<Result<Vec<_>>>()?;
    let categorical = schema
        .categorical
        .iter()
        .map(|(c, vocab)| Ok((column(path, &header, c)?, vocab)))
        .collect::<Result<Vec<_>>>()?;
    let anomalous: BTreeSet<&str> = schema.anomaly_values.iter().map(String::as_str).collect();

    let width = schema.feature_names().len();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.at(path)?;
        let cell = |c: usize| row.get(c).unwrap_or_default();
        let mut features = Vec::with_capacity(width);
        for (&c, name) in numeric.iter().zip(&schema.numeric) {
            let value = cell(c);
            match value.parse::<f64>() {
                Ok(x) if x.is_finite() => features.push(x),
                _ => {
                    return Err(Error::UnparseableCell {
                        path: path.to_path_buf(),
                        row: i + 1,
                        column: name.clone(),
                        value: value.to_string(),
                    })
                }
            }
        }
        for &(c, vocab) in &categorical {
            let value = cell(c);
            features.extend(vocab.iter().map(|v| if v == value { 1.0 } else { 0.0 }));
        }
        records.push(FlowRecord {
            src_key: cell(key_a).to_string(),
            dst_key: cell(key_b).to_string(),
            features,
            label: if anomalous.contains(cell(label)) {
                Label::Anomalous
            } else {
                Label::Normal
            },
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmailCorpus {
    pub records: Vec<FlowRecord>,
    pub vocabulary: Vec<String>,
}

/// Lowercased runs of alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// `(headers, body)`; folded header lines are joined to their header.
fn split_message(text: &str) -> (Vec<(String, String)>, &str) {
    let mut headers: Vec<(String, String)> = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
        let line = line.strip_suffix('\r').unwrap_or(line);
        rest = tail;
        if line.is_empty() {
            break;
        }
        if line.starts_with([' ', '\t']) {
            if let Some(last) = headers.last_mut() {
                last.1.push(' ');
                last.1.push_str(line.trim());
            }
        } else if let Some((name, value)) = line.split_once(':') {
            headers.push((name.trim().to_ascii_lowercase(), value.trim().to_string()));
        }
    }
    (headers, rest)
}

/// The address of the first mailbox in a header value.
fn first_address(value: &str) -> Option<String> {
    let first = value.split(',').map(str::trim).find(|s| !s.is_empty())?;
    let addr = match (first.find('<'), first.find('>')) {
        (Some(a), Some(b)) if a < b => &first[a + 1..b],
        _ => first
            .split_whitespace()
            .find(|t| t.contains('@'))
            .unwrap_or(first),
    };
    let addr = addr.trim_matches(|c: char| c == '"' || c == '\'' || c.is_whitespace());
    (!addr.is_empty()).then(|| addr.to_lowercase())
}

fn message_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).at(dir)? {
        let path = entry.at(dir)?.path();
        let hidden = path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }
    files.sort();
    Ok(files)
}

/// Reads every file of `ham_dir` (normal) then `spam_dir` (anomalous), each
/// in file-name order. Sender and recipient become the edge endpoints; the
/// features are term frequencies over the `vocab_size` tokens with the
/// highest document frequency (ties broken alphabetically), scaled to sum 1.
///
/// Messages without a usable `From` or `To` header get the placeholder keys
/// `unknown-sender-<n>` and `unknown-recipient-<n>`, `n` being the message's
/// position in the corpus.
pub fn parse_email_corpus(ham_dir: &Path, spam_dir: &Path, vocab_size: usize) -> Result<EmailCorpus> {
    let mut messages = Vec::new();
    for (dir, label) in [(ham_dir, Label::Normal), (spam_dir, Label::Anomalous)] {
        for path in message_files(dir)? {
            let bytes = fs::read(&path).at(&path)?;
            let text = String::from_utf8_lossy(&bytes);
            let (headers, body) = split_message(&text);
            let header = |name: &str| {
                headers
                    .iter()
                    .find(|(n, _)| n == name)
                    .and_then(|(_, v)| first_address(v))
            };
            let tokens: Vec<String> = tokenize(body).collect();
            messages.push((header("from"), header("to"), tokens, label));
        }
    }

    let mut doc_freq: HashMap<&str, usize> = HashMap::new();
    for (_, _, tokens, _) in &messages {
        let distinct: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *doc_freq.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = doc_freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let vocabulary: Vec<String> = ranked.iter().take(vocab_size).map(|(t, _)| t.to_string()).collect();
    let slot: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    let records = messages
        .iter()
        .enumerate()
        .map(|(n, (from, to, tokens, label))| {
            let mut features = vec![0.0; vocabulary.len()];
            let mut hits = 0usize;
            for t in tokens {
                if let Some(&i) = slot.get(t.as_str()) {
                    features[i] += 1.0;
                    hits += 1;
                }
            }
            if hits > 0 {
                let inv = 1.0 / hits as f64;
                features.iter_mut().for_each(|x| *x *= inv);
            }
            FlowRecord {
                src_key: from.clone().unwrap_or_else(|| format!("unknown-sender-{n}")),
                dst_key: to.clone().unwrap_or_else(|| format!("unknown-recipient-{n}")),
                features,
                label: *label,
            }
        })
        .collect();
    Ok(EmailCorpus { records, vocabulary })
}
