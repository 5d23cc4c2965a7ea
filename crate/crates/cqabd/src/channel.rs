//! Multiuser broadcast-channel construction: per-user matrices, the
//! combined stack, and per-user exclusion stacks.

use ndarray::{s, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{sample_gaussian_matrix, CMat};

/// Antenna layout of one scenario: `nb` transmit antennas serving `users`
/// receivers with `per_user[j]` antennas each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioDims {
    pub nb: usize,
    pub per_user: Vec<usize>,
}

impl ScenarioDims {
    /// Validates that every user has at least one antenna and that the
    /// total receive count fits under the transmit count, which is what
    /// keeps the per-user null spaces nonempty.
    pub fn new(nb: usize, per_user: Vec<usize>) -> Result<Self> {
        if nb < 1 {
            return Err(Error::config("transmit antenna count must be >= 1"));
        }
        if per_user.is_empty() {
            return Err(Error::config("at least one user is required"));
        }
        if per_user.iter().any(|&n| n < 1) {
            return Err(Error::config("every user needs >= 1 receive antenna"));
        }
        let nu: usize = per_user.iter().sum();
        if nu > nb {
            return Err(Error::config(format!(
                "total receive antennas ({nu}) exceed transmit antennas ({nb})"
            )));
        }
        Ok(ScenarioDims { nb, per_user })
    }

    /// Convenience constructor for `users` identical receivers.
    pub fn uniform(nb: usize, users: usize, antennas_each: usize) -> Result<Self> {
        Self::new(nb, vec![antennas_each; users])
    }

    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    /// Total receive antenna count.
    pub fn nu(&self) -> usize {
        self.per_user.iter().sum()
    }

    /// Row range of user `j` (0-based) inside the combined stack.
    pub fn row_span(&self, j: usize) -> (usize, usize) {
        let start: usize = self.per_user[..j].iter().sum();
        (start, start + self.per_user[j])
    }
}

/// One channel realization: per-user matrices and their vertical stack.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub dims: ScenarioDims,
    pub per_user: Vec<CMat>,
    pub combined: CMat,
}

impl ChannelSet {
    /// Builds the set from per-user matrices, stacking them in user order.
    pub fn from_user_matrices(dims: ScenarioDims, per_user: Vec<CMat>) -> Result<Self> {
        if per_user.len() != dims.users() {
            return Err(Error::config("per-user matrix count mismatch"));
        }
        for (j, h) in per_user.iter().enumerate() {
            if h.dim() != (dims.per_user[j], dims.nb) {
                return Err(Error::config(format!(
                    "user {} channel has shape {:?}, expected ({}, {})",
                    j + 1,
                    h.dim(),
                    dims.per_user[j],
                    dims.nb
                )));
            }
        }
        let combined = stack_rows(&per_user, dims.nu(), dims.nb);
        Ok(ChannelSet {
            dims,
            per_user,
            combined,
        })
    }
}

fn stack_rows(blocks: &[CMat], rows: usize, cols: usize) -> CMat {
    let mut out = Array2::zeros((rows, cols));
    let mut r = 0;
    for b in blocks {
        let n = b.nrows();
        out.slice_mut(s![r..r + n, ..]).assign(b);
        r += n;
    }
    out
}

/// Draws each user's channel i.i.d. CN(0, 1) and stacks the result.
pub fn generate_channel<R: Rng>(dims: &ScenarioDims, rng: &mut R) -> ChannelSet {
    let per_user: Vec<CMat> = dims
        .per_user
        .iter()
        .map(|&nj| sample_gaussian_matrix(nj, dims.nb, 1.0, rng))
        .collect();
    let combined = stack_rows(&per_user, dims.nu(), dims.nb);
    ChannelSet {
        dims: dims.clone(),
        per_user,
        combined,
    }
}

/// Writes a channel set as CSV for regression fixtures. The header records
/// the layout (`nb` and the per-user antenna counts); each data row is
/// `user,row,col,re,im` with full round-trip precision.
pub fn dump_channel_csv(ch: &ChannelSet, path: &std::path::Path) -> Result<()> {
    let mut out = String::new();
    let counts: Vec<String> = ch.dims.per_user.iter().map(|n| n.to_string()).collect();
    out.push_str(&format!("# nb={} per_user={}\n", ch.dims.nb, counts.join("/")));
    out.push_str("user,row,col,re,im\n");
    for (j, h) in ch.per_user.iter().enumerate() {
        for ((r, c), z) in h.indexed_iter() {
            out.push_str(&format!("{},{},{},{:e},{:e}\n", j + 1, r, c, z.re, z.im));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a channel set written by [`dump_channel_csv`].
pub fn load_channel_csv(path: &std::path::Path) -> Result<ChannelSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::config("empty channel file"))?;
    let layout = header
        .strip_prefix("# nb=")
        .ok_or_else(|| Error::config("missing channel layout header"))?;
    let (nb_text, users_text) = layout
        .split_once(" per_user=")
        .ok_or_else(|| Error::config("malformed channel layout header"))?;
    let nb: usize = nb_text
        .parse()
        .map_err(|_| Error::config("malformed nb in channel header"))?;
    let per_user: Vec<usize> = users_text
        .split('/')
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::config("malformed per-user count in channel header"))
        })
        .collect::<Result<_>>()?;
    let dims = ScenarioDims::new(nb, per_user)?;
    let mut blocks: Vec<CMat> = dims
        .per_user
        .iter()
        .map(|&nj| Array2::zeros((nj, nb)))
        .collect();
    for line in lines.skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::config(format!("malformed channel row '{line}'")));
        }
        let user: usize = fields[0]
            .parse()
            .map_err(|_| Error::config("bad user index"))?;
        let r: usize = fields[1].parse().map_err(|_| Error::config("bad row"))?;
        let c: usize = fields[2].parse().map_err(|_| Error::config("bad col"))?;
        let re: f64 = fields[3].parse().map_err(|_| Error::config("bad re"))?;
        let im: f64 = fields[4].parse().map_err(|_| Error::config("bad im"))?;
        let block = blocks
            .get_mut(user.wrapping_sub(1))
            .ok_or_else(|| Error::config(format!("user {user} out of range")))?;
        if r >= block.nrows() || c >= block.ncols() {
            return Err(Error::config(format!("entry ({r},{c}) out of range")));
        }
        block[(r, c)] = num_complex::Complex64::new(re, im);
    }
    ChannelSet::from_user_matrices(dims, blocks)
}

/// Stack of all users' channels except user `j` (0-based), preserving the
/// original user order. Shape is (nu - per_user[j]) x nb.
pub fn exclude_user(ch: &ChannelSet, j: usize) -> Result<CMat> {
    let k = ch.dims.users();
    if j >= k {
        return Err(Error::config(format!(
            "user index {} out of range 1..={k}",
            j + 1
        )));
    }
    let rows = ch.dims.nu() - ch.dims.per_user[j];
    let blocks: Vec<CMat> = ch
        .per_user
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(stack_rows(&blocks, rows, ch.dims.nb))
}
