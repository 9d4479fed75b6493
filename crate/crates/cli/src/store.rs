use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kimap::db;
use kimap::protocol::{MasterKey, TagLabel, TagRecord, TagSnapshot};

/// The three files behind one provisioned deployment.
pub struct Paths {
    pub db: PathBuf,
    pub master: PathBuf,
    pub tags: PathBuf,
}

impl Paths {
    /// `master.key` sits next to the database; tag states go to `<db>.tags`.
    pub fn new(db: &Path) -> Self {
        let dir = db.parent().unwrap_or(Path::new(""));
        let mut tags = db.as_os_str().to_owned();
        tags.push(".tags");
        Self {
            db: db.to_path_buf(),
            master: dir.join("master.key"),
            tags: tags.into(),
        }
    }

    pub fn existing(&self) -> Option<&Path> {
        [&self.db, &self.master, &self.tags]
            .into_iter()
            .find(|p| p.exists())
            .map(PathBuf::as_path)
    }
}

pub struct Deployment {
    pub lambda: usize,
    pub master: MasterKey,
    pub records: Vec<TagRecord>,
    pub tags: Vec<(TagLabel, TagSnapshot)>,
    /// Raw database text, kept for deriving session randomness.
    pub db_text: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load(paths: &Paths) -> Result<Deployment> {
    let db_text = read(&paths.db)?;
    let (lambda, records) =
        db::parse_server_db(&db_text).with_context(|| format!("in {}", paths.db.display()))?;
    let master = db::parse_master(&read(&paths.master)?)
        .with_context(|| format!("in {}", paths.master.display()))?;
    let (tag_lambda, tags) = db::parse_tags(&read(&paths.tags)?)
        .with_context(|| format!("in {}", paths.tags.display()))?;
    if tag_lambda != lambda {
        return Err(crate::usage(format!(
            "{} has lambda={tag_lambda} but the database has lambda={lambda}",
            paths.tags.display()
        )));
    }
    Ok(Deployment {
        lambda,
        master,
        records,
        tags,
        db_text,
    })
}

/// Writes via a temporary sibling and a rename, so a crash never leaves a
/// half-written database.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

pub fn save(
    paths: &Paths,
    lambda: usize,
    master: Option<&MasterKey>,
    records: &[TagRecord],
    tags: &[(TagLabel, TagSnapshot)],
) -> Result<()> {
    if let Some(m) = master {
        write_atomic(&paths.master, &db::write_master(m))?;
    }
    write_atomic(&paths.tags, &db::write_tags(lambda, tags))?;
    write_atomic(&paths.db, &db::write_server_db(lambda, records))
}
