use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Image, SegMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainRole {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Image,
    pub mask: Option<SegMask>,
}

/// Ordered collection of same-sized images from one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    items: Vec<Sample>,
    role: DomainRole,
}

impl Dataset {
    pub fn new(items: Vec<Sample>, role: DomainRole) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::Parameter(format!("{role:?} dataset is empty")))?;
        let dims = first.image.dims();
        for (i, s) in items.iter().enumerate() {
            if s.image.dims() != dims {
                return Err(Error::Shape(format!(
                    "item {i} is {:?}, dataset uses {:?}",
                    s.image.dims(),
                    dims
                )));
            }
            if let Some(m) = &s.mask {
                if m.dims() != dims {
                    return Err(Error::Shape(format!("mask {i} is {:?}, image is {dims:?}", m.dims())));
                }
            }
        }
        Ok(Self { items, role })
    }

    pub fn role(&self) -> DomainRole {
        self.role
    }

    pub fn items(&self) -> &[Sample] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.items[0].image.dims()
    }

    pub fn images(&self) -> impl Iterator<Item = &Image> {
        self.items.iter().map(|s| &s.image)
    }

    /// All masks, or an error naming the first unlabeled item.
    pub fn masks(&self) -> Result<Vec<&SegMask>> {
        self.items
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.mask
                    .as_ref()
                    .ok_or_else(|| Error::Parameter(format!("item {i} has no mask")))
            })
            .collect()
    }

    pub fn is_labeled(&self) -> bool {
        self.items.iter().all(|s| s.mask.is_some())
    }
}
