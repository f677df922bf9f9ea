//! File-backed block store used by `--resume`: one binary S-matrix file per
//! (E, J, handedness) under `<out>/blocks/<config hash>/`, so blocks from a
//! different configuration are never picked up.

use std::fs;
use std::path::{Path, PathBuf};

use chirostab::dispersion::Handedness;
use chirostab::error::{Error, Result};
use chirostab::propagator::SMatrixBlock;
use chirostab::scatter::{BlockKey, BlockStore};
use chirostab::smatrix_io::{decode_binary, encode_binary};

pub struct FileStore {
    dir: PathBuf,
}

impl FileStore {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Format(format!("cannot create {}: {e}", dir.display())))?;
        Ok(FileStore { dir: dir.to_path_buf() })
    }

    fn path(&self, key: &BlockKey, h: Handedness) -> PathBuf {
        self.dir.join(format!("E{:016x}_J{}_{}.cdsm", key.energy_bits, key.j_total, h.label()))
    }

    fn read(&self, key: &BlockKey, h: Handedness) -> Option<SMatrixBlock> {
        let bytes = fs::read(self.path(key, h)).ok()?;
        let b = decode_binary(&bytes).ok()?;
        (b.j_total == key.j_total && b.handedness == h).then_some(b)
    }
}

impl BlockStore for FileStore {
    fn load(&self, key: &BlockKey) -> Option<(SMatrixBlock, SMatrixBlock)> {
        Some((self.read(key, Handedness::L)?, self.read(key, Handedness::R)?))
    }

    fn save(&self, key: &BlockKey, l: &SMatrixBlock, r: &SMatrixBlock) -> Result<()> {
        for (b, h) in [(l, Handedness::L), (r, Handedness::R)] {
            let p = self.path(key, h);
            let tmp = p.with_extension("tmp");
            fs::write(&tmp, encode_binary(b)).map_err(|e| Error::Format(format!("cannot write {}: {e}", tmp.display())))?;
            fs::rename(&tmp, &p).map_err(|e| Error::Format(format!("cannot move {}: {e}", p.display())))?;
        }
        Ok(())
    }
}
