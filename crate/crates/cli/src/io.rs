//! Panel CSV input and atomic output files.

use std::fs;
use std::path::{Path, PathBuf};

use tempart_core::Dataset;

use crate::error::{CliError, Result};

/// A response panel as read from disk: `unit_id, [lat, lon,] y_1..y_T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub unit_ids: Vec<String>,
    pub time_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub coords: Option<Vec<[f64; 2]>>,
}

impl Panel {
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n_times(&self) -> usize {
        self.time_ids.len()
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        let mut d = Dataset::new(self.rows.clone()).map_err(CliError::data)?;
        if let Some(c) = &self.coords {
            d = d.with_raw_coords(c.clone()).map_err(CliError::data)?;
        }
        d.unit_ids = self.unit_ids.clone();
        d.time_ids = self.time_ids.clone();
        Ok(d)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["unit_id".to_string()];
        if self.coords.is_some() {
            header.push("lat".into());
            header.push("lon".into());
        }
        header.extend(self.time_ids.iter().map(|t| format!("y_{t}")));
        w.write_record(&header).expect("in-memory write");
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = vec![self.unit_ids[i].clone()];
            if let Some(c) = &self.coords {
                rec.push(c[i][0].to_string());
                rec.push(c[i][1].to_string());
            }
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }
}

fn parse_cell(text: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = text.trim().parse().map_err(|_| {
        CliError::Data(format!("line {line}, column `{column}`: `{text}` is not a number"))
    })?;
    if !v.is_finite() {
        return Err(CliError::Data(format!(
            "line {line}, column `{column}`: value `{text}` is not finite"
        )));
    }
    Ok(v)
}

/// Read a wide panel CSV. Response columns are every column after
/// `unit_id` (and `lat`, `lon` when present); a `y_` prefix is stripped
/// from their names to form time labels.
pub fn read_panel(path: &Path) -> Result<Panel> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("unit_id") {
        return Err(CliError::Data(format!(
            "{}: first column must be `unit_id`",
            path.display()
        )));
    }
    let spatial = header.get(1).map(String::as_str) == Some("lat")
        && header.get(2).map(String::as_str) == Some("lon");
    let first_y = if spatial { 3 } else { 1 };
    if header.len() <= first_y {
        return Err(CliError::Data(format!("{}: no response columns", path.display())));
    }
    let time_ids: Vec<String> = header[first_y..]
        .iter()
        .map(|h| h.strip_prefix("y_").unwrap_or(h).to_string())
        .collect();
    let mut panel = Panel {
        unit_ids: Vec::new(),
        time_ids,
        rows: Vec::new(),
        coords: spatial.then(Vec::new),
    };
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if rec.len() != header.len() {
            return Err(CliError::Data(format!(
                "{}: line {line} has {} fields, expected {}",
                path.display(),
                rec.len(),
                header.len()
            )));
        }
        panel.unit_ids.push(rec[0].to_string());
        if let Some(c) = panel.coords.as_mut() {
            c.push([parse_cell(&rec[1], line, "lat")?, parse_cell(&rec[2], line, "lon")?]);
        }
        let row = (first_y..rec.len())
            .map(|j| parse_cell(&rec[j], line, &header[j]))
            .collect::<Result<Vec<f64>>>()?;
        panel.rows.push(row);
    }
    if panel.rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(panel)
}

/// Files written by one command. Each file goes to a temporary name and is
/// renamed into place; [`Outputs::discard`] removes everything written so
/// far, including directories this set created.
#[derive(Debug)]
pub struct Outputs {
    root: PathBuf,
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(root: &Path) -> Self {
        Outputs {
            root: root.to_path_buf(),
            files: Vec::new(),
            dirs: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn ensure_dir(&mut self, dir: &Path) -> Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        for d in missing.into_iter().rev() {
            fs::create_dir(&d).map_err(|e| CliError::io(&d, e))?;
            self.dirs.push(d);
        }
        Ok(())
    }

    /// Write `bytes` to `root/relative`.
    pub fn write(&mut self, relative: impl AsRef<Path>, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            self.ensure_dir(parent)?;
        }
        let mut tmp = path.clone().into_os_string();
        tmp.push(".partial");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
        if let Err(e) = fs::rename(&tmp, &path) {
            let _ = fs::remove_file(&tmp);
            return Err(CliError::io(&path, e));
        }
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn discard(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}

/// Write every `(relative path, contents)` pair, or none of them.
pub fn write_all(root: &Path, files: &[(PathBuf, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    let mut out = Outputs::new(root);
    for (name, bytes) in files {
        if let Err(e) = out.write(name, bytes) {
            out.discard();
            return Err(e);
        }
    }
    Ok(out.written().to_vec())
}

pub fn to_json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_round_trip_with_coords() {
        let p = Panel {
            unit_ids: vec!["a".into(), "b".into()],
            time_ids: vec!["1".into(), "2".into(), "3".into()],
            rows: vec![vec![1.5, -2.0, 0.1], vec![3.0, 4.25, 1e-3]],
            coords: Some(vec![[45.1, 9.2], [45.6, 8.7]]),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, p.to_csv()).unwrap();
        assert_eq!(read_panel(&path).unwrap(), p);
    }

    #[test]
    fn bad_cells_name_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, "unit_id,y_1,y_2\nA,1,2\nB,3,oops\n").unwrap();
        let err = read_panel(&path).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("y_2"), "{err}");
        fs::write(&path, "unit_id,y_1,y_2\nA,1,NaN\n").unwrap();
        assert!(matches!(read_panel(&path), Err(CliError::Data(_))));
        fs::write(&path, "id,y_1\nA,1\n").unwrap();
        assert!(matches!(read_panel(&path), Err(CliError::Data(_))));
    }

    #[test]
    fn discard_removes_files_and_new_dirs() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("new/deeper");
        let mut out = Outputs::new(&root);
        out.write("a.txt", b"x").unwrap();
        out.write("sub/b.txt", b"y").unwrap();
        assert!(root.join("sub/b.txt").exists());
        out.discard();
        assert!(!dir.path().join("new").exists());
        assert!(dir.path().exists());
    }
}
