//! A small simulated storage cluster.
//!
//! A payload is cut into block groups. Each block group is one coded array
//! whose cells are `lane_size` bytes wide; byte `q` of every cell belongs to
//! an independent code instance. Node `i` keeps its cells for all block
//! groups in one store, ordered by (block group, stripe), behind a fixed
//! header:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "PBEC"
//! 4       2     version (1)
//! 6       2     n
//! 8       2     k
//! 10      2     s, or the stripe count for rsr2 and mds layouts
//! 12      2     p, or 0
//! 14      4     lane_size (bytes per cell)
//! ```
//!
//! All integers are little-endian. A directory cluster keeps node `i` at
//! `node-iii/data.bin` and a text manifest at `manifest.txt`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::{self, Q};
use crate::error::{Error, Result};
use crate::framework::{rebuild_node, Decoder, Layout, LinearCellMap, StripeArray};
use crate::genpb::GenPiggyback;
use crate::mds::{CodeParams, MdsLayout};
use crate::repair::{Cell, CellSource, OpCount, RepairReport};
use crate::rsr2::Rsr2Code;

pub const MAGIC: &[u8; 4] = b"PBEC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 18;
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const NODE_FILE: &str = "data.bin";

/// Which construction a cluster uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Mds { alpha: usize },
    Rsr2,
    Gen { s: usize, p: usize },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Mds { .. } => "mds",
            Scheme::Rsr2 => "rsr2",
            Scheme::Gen { .. } => "gen",
        }
    }
}

#[derive(Debug, Clone)]
enum Code {
    Mds(MdsLayout),
    Rsr2(Rsr2Code),
    Gen(GenPiggyback),
}

macro_rules! with_layout {
    ($code:expr, $l:ident => $body:expr) => {
        match $code {
            Code::Mds($l) => $body,
            Code::Rsr2($l) => $body,
            Code::Gen($l) => $body,
        }
    };
}

/// A validated scheme with its layout and cell map.
#[derive(Debug, Clone)]
pub struct ClusterConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub k: usize,
    code: Code,
    map: LinearCellMap,
}

impl ClusterConfig {
    pub fn new(scheme: Scheme, n: usize, k: usize) -> Result<ClusterConfig> {
        let code = match scheme {
            Scheme::Mds { alpha } => Code::Mds(MdsLayout::new(CodeParams::new(n, k)?, alpha)?),
            Scheme::Rsr2 => Code::Rsr2(Rsr2Code::new(n, k)?),
            Scheme::Gen { s, p } => Code::Gen(GenPiggyback::with(n, k, s, p)?),
        };
        let map = with_layout!(&code, l => l.cell_map())?;
        Ok(ClusterConfig { scheme, n, k, code, map })
    }

    pub fn alpha(&self) -> usize {
        self.map.alpha()
    }

    pub fn r(&self) -> usize {
        self.n - self.k
    }

    pub fn map(&self) -> &LinearCellMap {
        &self.map
    }

    /// Payload bytes held by one block group.
    pub fn group_bytes(&self, lane_size: usize) -> usize {
        self.k * self.alpha() * lane_size
    }

    fn header_fields(&self) -> (u16, u16) {
        match self.scheme {
            Scheme::Gen { s, p } => (s as u16, p as u16),
            _ => (self.alpha() as u16, 0),
        }
    }

    fn encode(&self, messages: &[Vec<Vec<u8>>]) -> Result<StripeArray<Vec<u8>>> {
        with_layout!(&self.code, l => l.encode(messages))
    }

    fn repair_node<C: CellSource<Vec<u8>>>(
        &self,
        node: usize,
        source: &mut C,
    ) -> Result<(Vec<Vec<u8>>, RepairReport)> {
        with_layout!(&self.code, l => l.repair_node(&self.map, node, source))
    }
}

/// Block-group index of a cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub layout: String,
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub p: usize,
    pub alpha: usize,
    pub lane_size: usize,
    /// Number of block groups.
    pub lane_count: usize,
    pub payload_length: u64,
    /// CRC32 of the payload.
    pub checksum: u32,
}

impl Manifest {
    pub fn scheme(&self) -> Result<Scheme> {
        match self.layout.as_str() {
            "mds" => Ok(Scheme::Mds { alpha: self.alpha }),
            "rsr2" => Ok(Scheme::Rsr2),
            "gen" => Ok(Scheme::Gen { s: self.s, p: self.p }),
            other => Err(Error::Format { what: "manifest", detail: format!("unknown layout {other:?}") }),
        }
    }
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "layout={}", self.layout)?;
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "k={}", self.k)?;
        writeln!(f, "s={}", self.s)?;
        writeln!(f, "p={}", self.p)?;
        writeln!(f, "alpha={}", self.alpha)?;
        writeln!(f, "lane_size={}", self.lane_size)?;
        writeln!(f, "lane_count={}", self.lane_count)?;
        writeln!(f, "payload_length={}", self.payload_length)?;
        writeln!(f, "checksum={:08x}", self.checksum)
    }
}

impl FromStr for Manifest {
    type Err = Error;

    fn from_str(text: &str) -> Result<Manifest> {
        let bad = |detail: String| Error::Format { what: "manifest", detail };
        let mut fields = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("no '=' in {line:?}")))?;
            fields.insert(key.trim(), value.trim());
        }
        let get = |key: &str| fields.get(key).copied().ok_or_else(|| bad(format!("missing {key}")));
        let num = |key: &str| -> Result<usize> {
            get(key)?.parse().map_err(|_| bad(format!("{key} is not a number")))
        };
        Ok(Manifest {
            layout: get("layout")?.to_string(),
            n: num("n")?,
            k: num("k")?,
            s: num("s")?,
            p: num("p")?,
            alpha: num("alpha")?,
            lane_size: num("lane_size")?,
            lane_count: num("lane_count")?,
            payload_length: get("payload_length")?
                .parse()
                .map_err(|_| bad("payload_length is not a number".into()))?,
            checksum: u32::from_str_radix(get("checksum")?, 16)
                .map_err(|_| bad("checksum is not hex".into()))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeHeader {
    pub n: u16,
    pub k: u16,
    pub s: u16,
    pub p: u16,
    pub lane_size: u32,
}

impl NodeHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(MAGIC);
        b[4..6].copy_from_slice(&VERSION.to_le_bytes());
        b[6..8].copy_from_slice(&self.n.to_le_bytes());
        b[8..10].copy_from_slice(&self.k.to_le_bytes());
        b[10..12].copy_from_slice(&self.s.to_le_bytes());
        b[12..14].copy_from_slice(&self.p.to_le_bytes());
        b[14..18].copy_from_slice(&self.lane_size.to_le_bytes());
        b
    }

    pub fn parse(b: &[u8]) -> Result<NodeHeader> {
        let bad = |detail: &str| Error::Format { what: "node header", detail: detail.into() };
        if b.len() < HEADER_LEN {
            return Err(bad("too short"));
        }
        if &b[0..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let u16_at = |i: usize| u16::from_le_bytes([b[i], b[i + 1]]);
        if u16_at(4) != VERSION {
            return Err(bad("unsupported version"));
        }
        Ok(NodeHeader {
            n: u16_at(6),
            k: u16_at(8),
            s: u16_at(10),
            p: u16_at(12),
            lane_size: u32::from_le_bytes([b[14], b[15], b[16], b[17]]),
        })
    }
}

#[derive(Debug)]
enum Store {
    Memory(Vec<Option<Vec<u8>>>),
    Directory(PathBuf),
}

impl Store {
    fn node_dir(root: &Path, node: usize) -> PathBuf {
        root.join(format!("node-{node:03}"))
    }

    fn write(&mut self, node: usize, bytes: &[u8]) -> Result<()> {
        match self {
            Store::Memory(nodes) => {
                nodes[node] = Some(bytes.to_vec());
                Ok(())
            }
            Store::Directory(root) => {
                let dir = Store::node_dir(root, node);
                let io = |source| Error::NodeIo { node, source };
                fs::create_dir_all(&dir).map_err(io)?;
                let tmp = dir.join(format!("{NODE_FILE}.tmp"));
                fs::write(&tmp, bytes).map_err(io)?;
                fs::rename(&tmp, dir.join(NODE_FILE)).map_err(io)
            }
        }
    }

    fn remove(&mut self, node: usize) -> Result<()> {
        match self {
            Store::Memory(nodes) => {
                nodes[node] = None;
                Ok(())
            }
            Store::Directory(root) => match fs::remove_dir_all(Store::node_dir(root, node)) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => Err(Error::NodeIo { node, source: e }),
                _ => Ok(()),
            },
        }
    }

    /// Header and total length, or `None` if the node is gone.
    fn probe(&self, node: usize) -> Result<Option<(NodeHeader, u64)>> {
        let (head, len) = match self {
            Store::Memory(nodes) => match &nodes[node] {
                None => return Ok(None),
                Some(b) => (b[..b.len().min(HEADER_LEN)].to_vec(), b.len() as u64),
            },
            Store::Directory(root) => {
                let path = Store::node_dir(root, node).join(NODE_FILE);
                let mut f = match File::open(&path) {
                    Ok(f) => f,
                    Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
                    Err(e) => return Err(Error::NodeIo { node, source: e }),
                };
                let len = f.metadata().map_err(|source| Error::NodeIo { node, source })?.len();
                let mut head = Vec::with_capacity(HEADER_LEN);
                (&mut f)
                    .take(HEADER_LEN as u64)
                    .read_to_end(&mut head)
                    .map_err(|source| Error::NodeIo { node, source })?;
                (head, len)
            }
        };
        Ok(NodeHeader::parse(&head).ok().map(|h| (h, len)))
    }

    fn read_at(&self, node: usize, offset: u64, len: usize) -> Result<Vec<u8>> {
        match self {
            Store::Memory(nodes) => {
                let b = nodes[node]
                    .as_ref()
                    .ok_or_else(|| Error::Unrecoverable(format!("node {node} is unavailable")))?;
                let o = offset as usize;
                b.get(o..o + len)
                    .map(<[u8]>::to_vec)
                    .ok_or_else(|| Error::Format { what: "node store", detail: format!("node {node} truncated") })
            }
            Store::Directory(root) => {
                let io = |source| Error::NodeIo { node, source };
                let mut f = File::open(Store::node_dir(root, node).join(NODE_FILE)).map_err(io)?;
                f.seek(SeekFrom::Start(offset)).map_err(io)?;
                let mut buf = vec![0u8; len];
                f.read_exact(&mut buf).map_err(io)?;
                Ok(buf)
            }
        }
    }
}

/// Cluster condition after failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Health {
    Healthy,
    /// Some nodes are down but every byte is still recoverable.
    Degraded(Vec<usize>),
    /// More than `r` nodes are down.
    DataLoss(Vec<usize>),
}

/// Every cell read by one repair, tagged with its block group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BandwidthLedger {
    pub reads: Vec<(usize, usize, usize)>,
    pub per_node: BTreeMap<usize, usize>,
}

impl BandwidthLedger {
    fn record(&mut self, group: usize, report: &RepairReport) {
        for c in &report.downloaded {
            self.reads.push((c.node, c.stripe, group));
            *self.per_node.entry(c.node).or_default() += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.reads.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairPath {
    /// The node was healthy and nothing was done.
    Skipped,
    /// The layout's own single-node repair.
    Single,
    /// Full decode from `k` survivors and re-encode, used when other nodes
    /// are down too.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairSummary {
    pub node: usize,
    pub path: RepairPath,
    pub ledger: BandwidthLedger,
    pub ops: OpCount,
    /// Per-group reports, in block-group order.
    pub reports: Vec<RepairReport>,
}

impl RepairSummary {
    pub fn symbol_count(&self) -> usize {
        self.ledger.total()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub failed: Vec<usize>,
    pub checksum_ok: bool,
    /// Surviving nodes whose content disagrees with a fresh encode.
    pub inconsistent: Vec<usize>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.failed.is_empty() && self.checksum_ok && self.inconsistent.is_empty()
    }
}

#[derive(Debug)]
pub struct Cluster {
    config: ClusterConfig,
    manifest: Manifest,
    store: Store,
    failed: BTreeSet<usize>,
}

struct GroupSource<'a> {
    cluster: &'a Cluster,
    group: usize,
    exclude: Option<usize>,
}

impl CellSource<Vec<u8>> for GroupSource<'_> {
    fn fetch(&mut self, cell: Cell) -> Result<Vec<u8>> {
        if Some(cell.node) == self.exclude || self.cluster.failed.contains(&cell.node) {
            return Err(Error::Unrecoverable(format!("node {} is unavailable", cell.node)));
        }
        self.cluster.read_cell(cell.node, self.group, cell.stripe)
    }
}

impl Cluster {
    pub const DEFAULT_LANE_SIZE: usize = 4096;

    /// Empty in-memory cluster.
    pub fn in_memory(config: ClusterConfig, lane_size: usize) -> Result<Cluster> {
        let store = Store::Memory(vec![None; config.n]);
        Cluster::create(config, lane_size, store)
    }

    /// Empty cluster under `root`, which is created if missing.
    pub fn create_dir(config: ClusterConfig, lane_size: usize, root: &Path) -> Result<Cluster> {
        fs::create_dir_all(root)?;
        Cluster::create(config, lane_size, Store::Directory(root.to_path_buf()))
    }

    fn create(config: ClusterConfig, lane_size: usize, store: Store) -> Result<Cluster> {
        if lane_size == 0 || lane_size > u32::MAX as usize {
            return Err(Error::Config(format!("lane size {lane_size} out of range")));
        }
        let (s, p) = match config.scheme {
            Scheme::Gen { s, p } => (s, p),
            _ => (0, 0),
        };
        let manifest = Manifest {
            layout: config.scheme.name().into(),
            n: config.n,
            k: config.k,
            s,
            p,
            alpha: config.alpha(),
            lane_size,
            lane_count: 0,
            payload_length: 0,
            checksum: crc32fast::hash(&[]),
        };
        let mut c = Cluster { config, manifest, store, failed: BTreeSet::new() };
        c.ingest(&[])?;
        Ok(c)
    }

    /// Opens an existing directory cluster and probes every node.
    pub fn open_dir(root: &Path) -> Result<Cluster> {
        let text = fs::read_to_string(root.join(MANIFEST_FILE))?;
        let manifest: Manifest = text.parse()?;
        let config = ClusterConfig::new(manifest.scheme()?, manifest.n, manifest.k)?;
        if config.alpha() != manifest.alpha {
            return Err(Error::Format { what: "manifest", detail: "alpha does not match layout".into() });
        }
        let mut c = Cluster {
            config,
            manifest,
            store: Store::Directory(root.to_path_buf()),
            failed: BTreeSet::new(),
        };
        c.refresh()?;
        Ok(c)
    }

    pub fn config(&self) -> &ClusterConfig {
        &self.config
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn failed(&self) -> Vec<usize> {
        self.failed.iter().copied().collect()
    }

    pub fn health(&self) -> Health {
        let failed = self.failed();
        if failed.is_empty() {
            Health::Healthy
        } else if failed.len() > self.config.r() {
            Health::DataLoss(failed)
        } else {
            Health::Degraded(failed)
        }
    }

    fn header(&self) -> NodeHeader {
        let (s, p) = self.config.header_fields();
        NodeHeader {
            n: self.config.n as u16,
            k: self.config.k as u16,
            s,
            p,
            lane_size: self.manifest.lane_size as u32,
        }
    }

    fn node_len(&self) -> u64 {
        (HEADER_LEN + self.manifest.lane_count * self.config.alpha() * self.manifest.lane_size) as u64
    }

    /// Re-reads node stores and marks any missing or malformed one as failed.
    pub fn refresh(&mut self) -> Result<Health> {
        let expect = self.header();
        for node in 0..self.config.n {
            let ok = matches!(self.store.probe(node)?, Some((h, len)) if h == expect && len == self.node_len());
            if ok {
                self.failed.remove(&node);
            } else {
                self.failed.insert(node);
            }
        }
        Ok(self.health())
    }

    /// Raw cell of a live node.
    pub fn cell(&self, node: usize, group: usize, stripe: usize) -> Result<Vec<u8>> {
        self.check_node(node)?;
        if self.failed.contains(&node) {
            return Err(Error::Unrecoverable(format!("node {node} is unavailable")));
        }
        if group >= self.manifest.lane_count || stripe >= self.config.alpha() {
            return Err(Error::Argument(format!("cell ({group}, {stripe}) out of range")));
        }
        self.read_cell(node, group, stripe)
    }

    fn read_cell(&self, node: usize, group: usize, stripe: usize) -> Result<Vec<u8>> {
        let l = self.manifest.lane_size;
        let offset = HEADER_LEN + (group * self.config.alpha() + stripe) * l;
        self.store.read_at(node, offset as u64, l)
    }

    fn write_manifest(&self) -> Result<()> {
        if let Store::Directory(root) = &self.store {
            fs::write(root.join(MANIFEST_FILE), self.manifest.to_string())?;
        }
        Ok(())
    }

    fn group_messages(&self, payload: &[u8], group: usize) -> Vec<Vec<Vec<u8>>> {
        let (k, alpha, l) = (self.config.k, self.config.alpha(), self.manifest.lane_size);
        let base = group * self.config.group_bytes(l);
        (0..alpha)
            .map(|y| {
                (0..k)
                    .map(|m| {
                        let start = (base + (y * k + m) * l).min(payload.len());
                        let end = (base + (y * k + m + 1) * l).min(payload.len());
                        let mut cell = payload[start..end].to_vec();
                        cell.resize(l, 0);
                        cell
                    })
                    .collect()
            })
            .collect()
    }

    /// Replaces the cluster contents with `payload`. The last block group is
    /// zero-padded; the true length goes into the manifest.
    pub fn ingest(&mut self, payload: &[u8]) -> Result<&Manifest> {
        let (n, alpha, l) = (self.config.n, self.config.alpha(), self.manifest.lane_size);
        let groups = payload.len().div_ceil(self.config.group_bytes(l));
        let mut rows: Vec<Vec<u8>> = (0..n)
            .map(|_| {
                let mut v = Vec::with_capacity(HEADER_LEN + groups * alpha * l);
                v.extend_from_slice(&self.header().to_bytes());
                v
            })
            .collect();
        for g in 0..groups {
            let array = self.config.encode(&self.group_messages(payload, g))?;
            for (node, row) in rows.iter_mut().enumerate() {
                for stripe in 0..alpha {
                    row.extend_from_slice(array.get(node, stripe));
                }
            }
        }
        for (node, row) in rows.iter().enumerate() {
            self.store.write(node, row)?;
        }
        self.failed.clear();
        self.manifest.lane_count = groups;
        self.manifest.payload_length = payload.len() as u64;
        self.manifest.checksum = crc32fast::hash(payload);
        self.write_manifest()?;
        Ok(&self.manifest)
    }

    fn decoder(&self) -> Result<Decoder> {
        let alive: Vec<usize> = (0..self.config.n).filter(|i| !self.failed.contains(i)).collect();
        if alive.len() < self.config.k {
            return Err(Error::Unrecoverable(format!(
                "{} nodes alive, {} needed",
                alive.len(),
                self.config.k
            )));
        }
        Decoder::new(&self.config.map, &alive)
    }

    fn decode_group(&self, decoder: &Decoder, group: usize) -> Result<Vec<Vec<Vec<u8>>>> {
        decoder.decode(&mut GroupSource { cluster: self, group, exclude: None })
    }

    /// Reassembles the payload from any `k` live nodes.
    pub fn read_payload(&self) -> Result<Vec<u8>> {
        let decoder = self.decoder()?;
        let mut out = Vec::with_capacity(self.manifest.lane_count * self.config.group_bytes(self.manifest.lane_size));
        for g in 0..self.manifest.lane_count {
            for message in self.decode_group(&decoder, g)? {
                for cell in message {
                    out.extend_from_slice(&cell);
                }
            }
        }
        out.truncate(self.manifest.payload_length as usize);
        Ok(out)
    }

    /// Decodes the payload, checks it against the manifest checksum, and
    /// re-encodes every block group to compare with what live nodes hold.
    pub fn verify(&self) -> Result<VerifyReport> {
        let decoder = self.decoder()?;
        let mut payload = Vec::new();
        let mut inconsistent = BTreeSet::new();
        for g in 0..self.manifest.lane_count {
            let messages = self.decode_group(&decoder, g)?;
            let array = self.config.encode(&messages)?;
            for node in (0..self.config.n).filter(|i| !self.failed.contains(i)) {
                for stripe in 0..self.config.alpha() {
                    if &self.read_cell(node, g, stripe)? != array.get(node, stripe) {
                        inconsistent.insert(node);
                    }
                }
            }
            for cell in messages.into_iter().flatten() {
                payload.extend_from_slice(&cell);
            }
        }
        payload.truncate(self.manifest.payload_length as usize);
        Ok(VerifyReport {
            failed: self.failed(),
            checksum_ok: crc32fast::hash(&payload) == self.manifest.checksum,
            inconsistent: inconsistent.into_iter().collect(),
        })
    }

    /// Erases a node's store.
    pub fn fail_node(&mut self, node: usize) -> Result<Health> {
        self.check_node(node)?;
        self.store.remove(node)?;
        self.failed.insert(node);
        Ok(self.health())
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.config.n {
            return Err(Error::Argument(format!("node {node} out of range 0..{}", self.config.n)));
        }
        Ok(())
    }

    /// Rebuilds a failed node. A healthy node is left alone.
    pub fn repair(&mut self, node: usize) -> Result<RepairSummary> {
        self.check_node(node)?;
        if !self.failed.contains(&node) {
            return Ok(RepairSummary {
                node,
                path: RepairPath::Skipped,
                ledger: BandwidthLedger::default(),
                ops: OpCount::default(),
                reports: Vec::new(),
            });
        }
        self.rebuild(node)
    }

    /// Rebuilds a node whether or not it looks failed.
    pub fn repair_forced(&mut self, node: usize) -> Result<RepairSummary> {
        self.check_node(node)?;
        self.rebuild(node)
    }

    fn rebuild(&mut self, node: usize) -> Result<RepairSummary> {
        let (n, k, alpha) = (self.config.n, self.config.k, self.config.alpha());
        let helpers: Vec<usize> = (0..n).filter(|&i| i != node && !self.failed.contains(&i)).collect();
        if helpers.len() < k {
            return Err(Error::Unrecoverable(format!(
                "node {node}: {} helpers alive, {k} needed",
                helpers.len()
            )));
        }
        let path = if helpers.len() == n - 1 { RepairPath::Single } else { RepairPath::Fallback };
        let mut row = self.header().to_bytes().to_vec();
        let mut ledger = BandwidthLedger::default();
        let mut ops = OpCount::default();
        let mut reports = Vec::with_capacity(self.manifest.lane_count);
        for g in 0..self.manifest.lane_count {
            let mut src = GroupSource { cluster: self, group: g, exclude: Some(node) };
            let (column, report) = match path {
                RepairPath::Fallback => rebuild_node(&self.config.map, node, &helpers, &mut src)?,
                _ => self.config.repair_node(node, &mut src)?,
            };
            debug_assert_eq!(column.len(), alpha);
            for cell in &column {
                row.extend_from_slice(cell);
            }
            ledger.record(g, &report);
            ops += report.ops();
            reports.push(report);
        }
        self.store.write(node, &row)?;
        self.failed.remove(&node);
        Ok(RepairSummary { node, path, ledger, ops, reports })
    }
}

/// One row of a measured-versus-closed-form comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaCheck {
    pub scheme: Scheme,
    pub n: usize,
    pub k: usize,
    /// Symbols downloaded to repair each systematic node once.
    pub total_download: usize,
    pub measured: Q,
    pub analytic: Q,
}

impl FormulaCheck {
    pub fn matches(&self) -> bool {
        self.measured == self.analytic
    }
}

/// Builds a one-group cluster per configuration, repairs every systematic
/// node, and compares the measured ratio with the closed form.
pub fn validate_formulas(grid: &[(Scheme, usize, usize)]) -> Result<Vec<FormulaCheck>> {
    let mut out = Vec::with_capacity(grid.len());
    for &(scheme, n, k) in grid {
        let config = ClusterConfig::new(scheme, n, k)?;
        let alpha = config.alpha();
        let payload: Vec<u8> = (0..config.group_bytes(1)).map(|i| (i * 151 + 7) as u8).collect();
        let mut cluster = Cluster::in_memory(config, 1)?;
        cluster.ingest(&payload)?;
        let mut total = 0;
        for l in 0..k {
            cluster.fail_node(l)?;
            total += cluster.repair(l)?.symbol_count();
        }
        let analytic = match scheme {
            Scheme::Mds { .. } => Q::from_integer(1),
            Scheme::Rsr2 => analysis::gamma1(n, k)?,
            Scheme::Gen { s, p } => analysis::gamma2(n, k, s, p)?,
        };
        out.push(FormulaCheck {
            scheme,
            n,
            k,
            total_download: total,
            measured: Q::new(total as i128, (k * k * alpha) as i128),
            analytic,
        });
    }
    Ok(out)
}
