//! Conversions between the two model types and the shared checkpoint container.

use std::path::Path;

use sightwalk_core::Checkpoint;

use crate::navnet::{NavArch, NavModel};
use crate::segnet::{SegArch, SegModel};
use crate::{Error, Result};

pub const SEGNET_KIND: &str = "segnet";
pub const NAVNET_KIND: &str = "navnet";

impl SegModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: SEGNET_KIND.into(),
            descriptor: serde_json::to_value(&self.arch).expect("arch serializes"),
            classes: Some(self.classes.clone()),
            metadata: self.metadata.clone(),
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.kind != SEGNET_KIND {
            return Err(Error::Checkpoint(format!("expected a segnet checkpoint, found {:?}", ck.kind)));
        }
        let arch: SegArch =
            serde_json::from_value(ck.descriptor).map_err(|e| Error::Checkpoint(format!("descriptor: {e}")))?;
        arch.validate()?;
        let classes = ck
            .classes
            .ok_or_else(|| Error::Checkpoint("segnet checkpoint has no class table".into()))?;
        if classes.len() != arch.classes {
            return Err(Error::Checkpoint(format!(
                "class table has {} entries, head has {}",
                classes.len(),
                arch.classes
            )));
        }
        arch.check_layout(&ck.params)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Self {
            arch,
            params: ck.params,
            classes,
            metadata: ck.metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(Checkpoint::load(path)?)
    }
}

impl NavModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: NAVNET_KIND.into(),
            descriptor: serde_json::to_value(&self.arch).expect("arch serializes"),
            classes: None,
            metadata: self.metadata.clone(),
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.kind != NAVNET_KIND {
            return Err(Error::Checkpoint(format!("expected a navnet checkpoint, found {:?}", ck.kind)));
        }
        let arch: NavArch =
            serde_json::from_value(ck.descriptor).map_err(|e| Error::Checkpoint(format!("descriptor: {e}")))?;
        arch.validate()?;
        arch.check_layout(&ck.params)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Self {
            arch,
            params: ck.params,
            metadata: ck.metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(Checkpoint::load(path)?)
    }
}
