//! Users file: a header line `{"num_features": K, "num_classes": C}` followed
//! by one JSON object per user with `user_id`, `features` (M rows of K
//! floats) and `interests` (indices of the positive categories).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One user's photo set and ground-truth interest categories.
#[derive(Debug, Clone, PartialEq)]
pub struct UserExample {
    pub user_id: String,
    /// Shape `(M, K)`.
    pub features: Array2<f64>,
    /// Sorted, distinct category indices.
    pub interests: Vec<usize>,
}

impl UserExample {
    /// Binary target vector of length `num_classes`.
    pub fn targets(&self, num_classes: usize) -> Vec<f64> {
        let mut t = vec![0.0; num_classes];
        for &c in &self.interests {
            t[c] = 1.0;
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsersHeader {
    pub num_features: usize,
    pub num_classes: usize,
}

#[derive(Serialize, Deserialize)]
struct UserLine {
    user_id: String,
    features: Vec<Vec<f64>>,
    interests: Vec<usize>,
}

fn to_example(line: UserLine, header: &UsersHeader, lineno: usize) -> Result<UserExample> {
    let bad = |message: String| Error::Malformed {
        line: lineno,
        message,
    };
    if line.features.is_empty() {
        return Err(bad(format!("user {} has no photos", line.user_id)));
    }
    if let Some(row) = line
        .features
        .iter()
        .find(|r| r.len() != header.num_features)
    {
        return Err(bad(format!(
            "user {} has a feature row of length {}, header says {}",
            line.user_id,
            row.len(),
            header.num_features
        )));
    }
    if line.features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(bad(format!(
            "user {} has a non-finite feature",
            line.user_id
        )));
    }
    let mut interests = line.interests;
    interests.sort_unstable();
    interests.dedup();
    if let Some(&c) = interests.iter().find(|&&c| c >= header.num_classes) {
        return Err(bad(format!(
            "user {} has interest {c} outside {} categories",
            line.user_id, header.num_classes
        )));
    }
    let m = line.features.len();
    let flat: Vec<f64> = line.features.into_iter().flatten().collect();
    let features = Array2::from_shape_vec((m, header.num_features), flat).expect("checked shape");
    Ok(UserExample {
        user_id: line.user_id,
        features,
        interests,
    })
}

pub fn read_users(path: &Path) -> Result<(UsersHeader, Vec<UserExample>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header_text = lines
        .next()
        .ok_or_else(|| Error::Malformed {
            line: 1,
            message: "missing header line".into(),
        })?
        .map_err(|e| Error::io(path, e))?;
    let header: UsersHeader = serde_json::from_str(&header_text).map_err(|e| Error::Malformed {
        line: 1,
        message: e.to_string(),
    })?;
    if header.num_classes == 0 || header.num_features == 0 {
        return Err(Error::Malformed {
            line: 1,
            message: "num_features and num_classes must be positive".into(),
        });
    }
    let mut users = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let text = line.map_err(|e| Error::io(path, e))?;
        if text.trim().is_empty() {
            continue;
        }
        let parsed: UserLine = serde_json::from_str(&text).map_err(|e| Error::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        users.push(to_example(parsed, &header, lineno)?);
    }
    Ok((header, users))
}

pub fn write_users(header: &UsersHeader, users: &[UserExample], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(path, e);
    let json = |e: serde_json::Error| Error::InvalidInput(e.to_string());
    serde_json::to_writer(&mut out, header).map_err(json)?;
    out.write_all(b"\n").map_err(io)?;
    for user in users {
        let line = UserLine {
            user_id: user.user_id.clone(),
            features: user
                .features
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            interests: user.interests.clone(),
        };
        serde_json::to_writer(&mut out, &line).map_err(json)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}
