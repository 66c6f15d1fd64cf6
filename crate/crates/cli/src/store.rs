//! Contract state on disk: `contract.json`, an append-only `contract.log`
//! and a `contract.lock` file held while a command mutates the state.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fiat_core::protocol::Contract;

pub const STATE_FILE: &str = "contract.json";
pub const LOG_FILE: &str = "contract.log";
pub const LOCK_FILE: &str = "contract.lock";

pub struct Store {
    dir: PathBuf,
    lock: PathBuf,
    pub contract: Contract,
    logged: usize,
}

impl Store {
    /// Locks `dir` and loads the contract, or starts a fresh one.
    pub fn open(dir: &Path, owner: &str, consumer: &str) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let lock = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => writeln!(f, "{}", std::process::id())?,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                bail!("{} exists; another command holds the contract", lock.display())
            }
            Err(e) => return Err(e).context("creating lock file"),
        }
        let mut store = Store { dir: dir.to_path_buf(), lock, contract: Contract::new(owner, consumer), logged: 0 };
        let path = dir.join(STATE_FILE);
        if path.exists() {
            let text = fs::read_to_string(&path)?;
            store.contract = serde_json::from_str(&text)
                .map_err(|e| fiat_core::Error::ParseError(format!("{}: {e}", path.display())))?;
        }
        store.logged = store.contract.log.len();
        Ok(store)
    }

    /// Writes the state and appends records added since `open`.
    pub fn save(&mut self) -> anyhow::Result<()> {
        let tmp = self.dir.join(format!("{STATE_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_string_pretty(&self.contract)?)?;
        fs::rename(&tmp, self.dir.join(STATE_FILE))?;
        let mut log = OpenOptions::new().create(true).append(true).open(self.dir.join(LOG_FILE))?;
        for r in &self.contract.log[self.logged..] {
            writeln!(log, "{}", r.to_tsv())?;
        }
        self.logged = self.contract.log.len();
        Ok(())
    }
}

impl Drop for Store {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
