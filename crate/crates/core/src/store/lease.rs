//! Per-document write leases.

use std::collections::HashMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::StoreError;

pub const DEFAULT_LEASE_TTL_MINUTES: i64 = 15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lease {
    pub doc_id: String,
    pub annotator: String,
    pub token: String,
    pub expires_at: DateTime<Utc>,
}

impl Lease {
    pub fn is_valid_at(&self, now: DateTime<Utc>) -> bool {
        now < self.expires_at
    }
}

#[derive(Debug, Clone)]
pub struct LeaseTable {
    ttl: Duration,
    leases: HashMap<String, Lease>,
}

impl Default for LeaseTable {
    fn default() -> Self {
        LeaseTable::new(Duration::minutes(DEFAULT_LEASE_TTL_MINUTES))
    }
}

impl LeaseTable {
    pub fn new(ttl: Duration) -> LeaseTable {
        LeaseTable {
            ttl,
            leases: HashMap::new(),
        }
    }

    /// Grants the document to `annotator`, or renews their existing lease.
    /// Fails while another annotator holds an unexpired lease.
    pub fn acquire(&mut self, doc_id: &str, annotator: &str, now: DateTime<Utc>) -> Result<Lease, StoreError> {
        if let Some(current) = self.leases.get_mut(doc_id) {
            if current.is_valid_at(now) {
                if current.annotator != annotator {
                    return Err(StoreError::LeaseHeld {
                        doc_id: doc_id.to_owned(),
                        holder: current.annotator.clone(),
                    });
                }
                current.expires_at = now + self.ttl;
                return Ok(current.clone());
            }
        }
        let lease = Lease {
            doc_id: doc_id.to_owned(),
            annotator: annotator.to_owned(),
            token: uuid::Uuid::new_v4().to_string(),
            expires_at: now + self.ttl,
        };
        self.leases.insert(doc_id.to_owned(), lease.clone());
        Ok(lease)
    }

    pub fn release(&mut self, doc_id: &str, token: &str) -> Result<(), StoreError> {
        match self.leases.get(doc_id) {
            Some(l) if l.token == token => {
                self.leases.remove(doc_id);
                Ok(())
            }
            _ => Err(StoreError::LeaseInvalid(doc_id.to_owned())),
        }
    }

    /// Validates a write and extends the lease on success.
    pub fn check(&mut self, doc_id: &str, token: &str, annotator: &str, now: DateTime<Utc>) -> Result<(), StoreError> {
        match self.leases.get_mut(doc_id) {
            Some(l) if l.token == token && l.annotator == annotator && l.is_valid_at(now) => {
                l.expires_at = now + self.ttl;
                Ok(())
            }
            _ => Err(StoreError::LeaseInvalid(doc_id.to_owned())),
        }
    }

    pub fn holder(&self, doc_id: &str, now: DateTime<Utc>) -> Option<&Lease> {
        self.leases.get(doc_id).filter(|l| l.is_valid_at(now))
    }

    /// Every recorded lease, expired ones included.
    pub fn iter(&self) -> impl Iterator<Item = &Lease> {
        self.leases.values()
    }
}
