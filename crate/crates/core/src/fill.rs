//! Depth-first completion of configurations on a ball subject to the window
//! constraints of an SFT.
//!
//! Cells are assigned in ball order. Every window fixes an order of its own
//! cells (by ball position), so at any point of the search the assigned part
//! of a window is a prefix in that order; a precomputed table of allowed
//! prefixes prunes as soon as a window can no longer be completed.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::shift::{ShiftSpace, SftSpec};

pub(crate) struct WindowIndex {
    cells: usize,
    window_len: usize,
    alphabet: usize,
    /// `window_cells[w * window_len + p]` = cell of `h_p g_w`.
    window_cells: Vec<u32>,
    /// Window positions sorted by cell index, per window.
    window_perm: Vec<u32>,
    /// For each cell, windows containing it with the cell's rank in the window order.
    incidence: Vec<Vec<(u32, u8)>>,
    perms: Vec<Vec<u8>>,
    /// `prefix_ok[perm][len]` indexed by prefix code.
    prefix_ok: Vec<Vec<Vec<bool>>>,
    sft_allowed: Vec<bool>,
}

impl WindowIndex {
    /// Windows at every `g` with `|g| <= radius - M` of a configuration on
    /// `ball(radius)`.
    pub(crate) fn new(space: &ShiftSpace, sft: &SftSpec, radius: u32) -> Result<Self> {
        let ball = space.ball();
        let m = sft.window_radius();
        let window_len = sft.window_len();
        let cells = ball.size_at(radius);
        let alphabet = sft.alphabet_size();
        let n_windows = if radius >= m { ball.size_at(radius - m) } else { 0 };
        let mut window_cells = Vec::with_capacity(n_windows * window_len);
        let mut window_perm = Vec::with_capacity(n_windows);
        let mut incidence: Vec<Vec<(u32, u8)>> = vec![Vec::new(); cells];
        let mut perm_ids: HashMap<Vec<u8>, u32> = HashMap::new();
        let mut perms = Vec::new();
        for g in 0..n_windows {
            let base = window_cells.len();
            for h in 0..window_len {
                let c = space
                    .right_translate(h, g)
                    .ok_or_else(|| Error::DomainExhausted("window leaves the ball".into()))?;
                window_cells.push(c as u32);
            }
            let wc = &window_cells[base..];
            let mut order: Vec<u8> = (0..window_len as u8).collect();
            order.sort_by_key(|&p| wc[p as usize]);
            for (rank, &p) in order.iter().enumerate() {
                incidence[wc[p as usize] as usize].push((g as u32, rank as u8));
            }
            let next = perm_ids.len() as u32;
            let id = *perm_ids.entry(order.clone()).or_insert_with(|| {
                perms.push(order);
                next
            });
            window_perm.push(id);
        }
        let sft_allowed = sft.allowed_mask().to_vec();
        let prefix_ok = perms
            .iter()
            .map(|perm| prefix_table(perm, alphabet, &sft_allowed))
            .collect();
        Ok(WindowIndex {
            cells,
            window_len,
            alphabet,
            window_cells,
            window_perm,
            incidence,
            perms,
            prefix_ok,
            sft_allowed,
        })
    }

    pub(crate) fn cells(&self) -> usize {
        self.cells
    }

    fn prefix_consistent(&self, values: &[u8], cell: usize) -> bool {
        for &(w, rank) in &self.incidence[cell] {
            let w = w as usize;
            let perm_id = self.window_perm[w] as usize;
            let perm = &self.perms[perm_id];
            let cells = &self.window_cells[w * self.window_len..(w + 1) * self.window_len];
            let mut code = 0usize;
            let mut scale = 1usize;
            for &p in &perm[..=rank as usize] {
                code += values[cells[p as usize] as usize] as usize * scale;
                scale *= self.alphabet;
            }
            if !self.prefix_ok[perm_id][rank as usize + 1][code] {
                return false;
            }
        }
        true
    }

    /// Whether every complete window containing `cell` is allowed.
    pub(crate) fn windows_ok_at(&self, values: &[u8], cell: usize) -> bool {
        self.incidence[cell].iter().all(|&(w, _)| {
            let w = w as usize;
            let cells = &self.window_cells[w * self.window_len..(w + 1) * self.window_len];
            let mut code = 0usize;
            let mut scale = 1usize;
            for &c in cells {
                code += values[c as usize] as usize * scale;
                scale *= self.alphabet;
            }
            self.sft_allowed[code]
        })
    }

    /// Finds one completion of `fixed` (cells beyond `fixed.len()` are free).
    /// With an RNG, symbol order is shuffled per cell.
    pub(crate) fn complete<R: Rng>(
        &self,
        fixed: &[Option<u8>],
        rng: Option<&mut R>,
        node_budget: u64,
    ) -> Result<Option<Vec<u8>>> {
        let mut found = None;
        self.search(self.cells, fixed, rng, node_budget, &mut |v| {
            found = Some(v.to_vec());
            Ok(false)
        })?;
        Ok(found)
    }

    /// Enumerates every assignment of the first `upto` cells that is
    /// consistent with the windows lying inside them. The visitor returns
    /// `false` to stop.
    pub(crate) fn enumerate_prefixes(
        &self,
        upto: usize,
        fixed: &[Option<u8>],
        node_budget: u64,
        visit: &mut dyn FnMut(&[u8]) -> Result<bool>,
    ) -> Result<()> {
        self.search::<rand_chacha::ChaCha8Rng>(upto, fixed, None, node_budget, visit)
    }

    fn search<R: Rng>(
        &self,
        upto: usize,
        fixed: &[Option<u8>],
        mut rng: Option<&mut R>,
        node_budget: u64,
        visit: &mut dyn FnMut(&[u8]) -> Result<bool>,
    ) -> Result<()> {
        let n = upto.min(self.cells);
        let s = self.alphabet;
        let mut values = vec![0u8; self.cells];
        let mut options = vec![0u8; n * s];
        let mut n_options = vec![0u8; n];
        let mut next = vec![0u8; n];
        let mut nodes = 0u64;
        let mut c = 0usize;
        let mut entering = true;
        if n == 0 {
            visit(&values[..0])?;
            return Ok(());
        }
        loop {
            if entering {
                let opts = &mut options[c * s..(c + 1) * s];
                match fixed.get(c).copied().flatten() {
                    Some(v) => {
                        opts[0] = v;
                        n_options[c] = 1;
                    }
                    None => {
                        for (i, o) in opts.iter_mut().enumerate() {
                            *o = i as u8;
                        }
                        if let Some(r) = rng.as_deref_mut() {
                            opts.shuffle(r);
                        }
                        n_options[c] = s as u8;
                    }
                }
                next[c] = 0;
                entering = false;
            }
            let mut advanced = false;
            while next[c] < n_options[c] {
                let v = options[c * s + next[c] as usize];
                next[c] += 1;
                nodes += 1;
                if nodes > node_budget {
                    return Err(Error::capacity("shift-space", "search nodes", nodes, node_budget));
                }
                values[c] = v;
                if self.prefix_consistent(&values, c) {
                    advanced = true;
                    break;
                }
            }
            if advanced {
                if c + 1 == n {
                    if !visit(&values[..n])? {
                        return Ok(());
                    }
                    // stay on the last cell and try its next option
                    continue;
                }
                c += 1;
                entering = true;
            } else {
                if c == 0 {
                    return Ok(());
                }
                c -= 1;
            }
        }
    }
}

fn prefix_table(perm: &[u8], alphabet: usize, allowed: &[bool]) -> Vec<Vec<bool>> {
    let len = perm.len();
    let mut table: Vec<Vec<bool>> = (0..=len).map(|l| vec![false; alphabet.pow(l as u32)]).collect();
    let mut digits = vec![0usize; len];
    for (code, &ok) in allowed.iter().enumerate() {
        if !ok {
            continue;
        }
        let mut rest = code;
        for d in digits.iter_mut() {
            *d = rest % alphabet;
            rest /= alphabet;
        }
        let mut pc = 0usize;
        let mut scale = 1usize;
        table[0][0] = true;
        for (l, &p) in perm.iter().enumerate() {
            pc += digits[p as usize] * scale;
            scale *= alphabet;
            table[l + 1][pc] = true;
        }
    }
    table
}
