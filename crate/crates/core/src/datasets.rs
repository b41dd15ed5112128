//! Benchmark datasets read from a local directory.
//!
//! None of these are shipped with the crate. Point `LFTC_DATA_DIR` at a
//! directory laid out as `<dir>/<name>/train.csv` and `<dir>/<name>/test.csv`
//! (`name` as returned by [`Dataset::dir_name`]). Files use a `label,text`
//! header, except AG News, which is read in its original three-column,
//! headerless form (class index, title, description).

use std::fmt;
use std::path::{Path, PathBuf};

use crate::corpus::{load_csv, Column, Corpus, CsvOptions};
use crate::error::{Error, Result};

pub const DATA_DIR_ENV: &str = "LFTC_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dataset {
    R8,
    Kinnews,
    Kirnews,
    AgNews,
    SogouNews,
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

impl Dataset {
    pub fn dir_name(self) -> &'static str {
        match self {
            Dataset::R8 => "r8",
            Dataset::Kinnews => "kinnews",
            Dataset::Kirnews => "kirnews",
            Dataset::AgNews => "agnews",
            Dataset::SogouNews => "sogounews",
        }
    }

    /// Published (train, test, classes); sample counts are rounded to the
    /// reported precision.
    pub fn published_size(self) -> (usize, usize, usize) {
        match self {
            Dataset::R8 => (5_500, 2_200, 8),
            Dataset::Kinnews => (17_000, 4_300, 14),
            Dataset::Kirnews => (3_700, 900, 14),
            Dataset::AgNews => (120_000, 7_600, 4),
            Dataset::SogouNews => (450_000, 60_000, 5),
        }
    }

    pub fn csv_options(self) -> CsvOptions {
        match self {
            Dataset::AgNews => CsvOptions {
                label_column: Column::Index(0),
                text_columns: vec![Column::Index(1), Column::Index(2)],
                has_header: false,
                delimiter: b',',
            },
            _ => CsvOptions::new(Column::Name("label".into()), Column::Name("text".into())),
        }
    }

    pub fn paths(self, root: &Path) -> (PathBuf, PathBuf) {
        let dir = root.join(self.dir_name());
        (dir.join("train.csv"), dir.join("test.csv"))
    }
}

/// `LFTC_DATA_DIR`, if set.
pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

/// Relative slack allowed between loaded and published counts. Published
/// counts are rounded ("5.5K") and public copies drift slightly.
pub const COUNT_TOLERANCE: f64 = 0.01;

/// Half a unit in the last published place: "5.5K" is 5,450..5,550,
/// "120K" is 119,500..120,500.
fn rounding_slack(published: usize) -> f64 {
    if published >= 10_000 && published.is_multiple_of(1_000) {
        500.0
    } else {
        50.0
    }
}

fn check_count(what: &str, got: usize, published: usize) -> Result<()> {
    let slack = published as f64 * COUNT_TOLERANCE + rounding_slack(published);
    if (got as f64 - published as f64).abs() > slack {
        return Err(Error::Validation(format!(
            "{what}: {got} samples, expected {published} ± {slack:.0}"
        )));
    }
    Ok(())
}

/// Loads both splits and checks them against the published sizes.
pub fn load(root: &Path, dataset: Dataset) -> Result<(Corpus, Corpus)> {
    let (train_path, test_path) = dataset.paths(root);
    let options = dataset.csv_options();
    let train = load_csv(&train_path, &options)?;
    let test = load_csv(&test_path, &options)?;
    let (n_train, n_test, classes) = dataset.published_size();
    check_count(&format!("{dataset} train"), train.len(), n_train)?;
    check_count(&format!("{dataset} test"), test.len(), n_test)?;
    if train.classes().len() != classes {
        return Err(Error::Validation(format!(
            "{dataset}: {} classes, expected {classes}",
            train.classes().len()
        )));
    }
    Ok((train, test))
}

/// [`load`] from `LFTC_DATA_DIR`.
pub fn load_from_env(dataset: Dataset) -> Result<(Corpus, Corpus)> {
    let root =
        data_dir().ok_or_else(|| Error::Validation(format!("{DATA_DIR_ENV} is not set; {dataset} is not bundled")))?;
    load(&root, dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_tolerance() {
        // 5,485 is the usual R8 train size, reported as 5.5K.
        assert!(check_count("r8", 5_485, 5_500).is_ok());
        assert!(check_count("r8", 5_300, 5_500).is_err());
        assert!(check_count("kirnews", 3_689, 3_700).is_ok());
        assert!(check_count("kirnews test", 923, 900).is_ok());
        assert!(check_count("kirnews test", 970, 900).is_err());
        assert!(check_count("agnews", 120_000, 120_000).is_ok());
    }

    #[test]
    fn missing_directory_is_an_io_error() {
        let err = load(Path::new("/definitely/not/here"), Dataset::R8).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }
}
