//! Per-class memory budgeting, herding ranking, exemplar selection and the
//! persistent exemplar store.

mod herding;
mod ledger;
mod select;
mod store;

pub use herding::{herding_order, FeatureVector, HerdingError, HerdingRank};
pub use ledger::{allocate, LedgerError, MemoryLedger};
pub use select::{select_exemplars, Selection};
pub use store::{
    read_manifest, sha256_hex, store_load, store_save, ClassMemory, EntryKind, ExemplarStore,
    ManifestClass, ManifestEntry, RealExemplar, StoreError, StoreManifest, MANIFEST_FILE,
    STORE_VERSION,
};
