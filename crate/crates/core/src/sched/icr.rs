/// Intra-node edge reordering for one cycle.
///
/// `candidates[i]` holds the distinct source nodes of the computable edges of
/// the i-th executing CU. Repeatedly picks the source shared by the most
/// still-unassigned CUs (ties: fewest occurrences over the whole cycle, then
/// lowest id) and gives it to every such CU. Returns the chosen source per entry.
pub fn icr_select(candidates: &[Vec<u32>]) -> Vec<u32> {
    let universe = candidates.iter().flatten().map(|&s| s as usize + 1).max().unwrap_or(0);
    IcrWorkspace::new(universe).select(candidates)
}

/// Reusable per-source scratch arrays for repeated selections over sources
/// below a fixed bound.
pub struct IcrWorkspace {
    stamp: Vec<u32>,
    epoch: u32,
    r_value: Vec<u32>,
    count: Vec<u32>,
    offset: Vec<u32>,
    members: Vec<u32>,
    distinct: Vec<u32>,
    buckets: Vec<Vec<u64>>,
}

impl IcrWorkspace {
    pub fn new(universe: usize) -> Self {
        Self {
            stamp: vec![0; universe],
            epoch: 0,
            r_value: vec![0; universe],
            count: vec![0; universe],
            offset: vec![0; universe],
            members: Vec::new(),
            distinct: Vec::new(),
            buckets: Vec::new(),
        }
    }

    pub fn select(&mut self, candidates: &[Vec<u32>]) -> Vec<u32> {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.distinct.clear();
        for &s in candidates.iter().flatten() {
            let s = s as usize;
            if self.stamp[s] != epoch {
                self.stamp[s] = epoch;
                self.r_value[s] = 0;
                self.distinct.push(s as u32);
            }
            self.r_value[s] += 1;
        }

        // Members of source s are members[offset[s]..offset[s] + r_value[s]].
        let mut total = 0u32;
        for &s in &self.distinct {
            let s = s as usize;
            self.offset[s] = total;
            self.count[s] = 0;
            total += self.r_value[s];
        }
        self.members.resize(total as usize, 0);
        for (i, c) in candidates.iter().enumerate() {
            for &s in c {
                let s = s as usize;
                self.members[(self.offset[s] + self.count[s]) as usize] = i as u32;
                self.count[s] += 1;
            }
        }

        // Bucket queue on the unassigned-CU count. Counts only fall, so once
        // the top bucket is reached nothing joins it: sort it once by
        // (occurrences, id) and walk it, skipping entries whose count moved on.
        for b in &mut self.buckets {
            b.clear();
        }
        if self.buckets.len() <= candidates.len() {
            self.buckets.resize_with(candidates.len() + 1, Vec::new);
        }
        for &s in &self.distinct {
            let r = self.r_value[s as usize];
            if r >= 2 {
                self.buckets[r as usize].push(u64::from(r) << 32 | u64::from(s));
            }
        }
        let mut chosen: Vec<Option<u32>> = vec![None; candidates.len()];
        let mut left = candidates.len();
        for c in (2..self.buckets.len()).rev() {
            if left == 0 {
                break;
            }
            let mut bucket = std::mem::take(&mut self.buckets[c]);
            bucket.sort_unstable();
            for &k in &bucket {
                let s = k as u32;
                let su = s as usize;
                if self.count[su] as usize != c {
                    continue;
                }
                let lo = self.offset[su] as usize;
                for k in lo..lo + self.r_value[su] as usize {
                    let i = self.members[k] as usize;
                    if chosen[i].is_some() {
                        continue;
                    }
                    chosen[i] = Some(s);
                    left -= 1;
                    for &h in &candidates[i] {
                        let h = h as usize;
                        self.count[h] -= 1;
                        if self.count[h] >= 2 && h != su {
                            self.buckets[self.count[h] as usize].push(u64::from(self.r_value[h]) << 32 | h as u64);
                        }
                    }
                }
            }
            bucket.clear();
            self.buckets[c] = bucket;
        }
        // Every remaining source now serves one CU, so picks no longer
        // interact: each CU takes its own best (fewest occurrences, lowest id).
        for (c, slot) in candidates.iter().zip(chosen.iter_mut()) {
            if slot.is_none() {
                *slot = c.iter().copied().min_by_key(|&s| (self.r_value[s as usize], s));
            }
        }
        chosen.into_iter().map(|c| c.expect("all assigned")).collect()
    }
}
