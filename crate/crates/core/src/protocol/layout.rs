use rug::integer::Order;
use rug::Integer;

use super::ProtocolError;
use crate::rules::{ItemId, ItemSet, RuleId};
use crate::wire::{Reader, WireError, Writer};

/// Width of the additive weight mask.
pub const MASK_BITS: u32 = 104;
/// Width of a masked weight field: a 64-bit weight plus a mask never carries out.
pub const WEIGHT_FIELD_BITS: u32 = MASK_BITS + 2;

fn bits_for(max: u64) -> u32 {
    (64 - max.leading_zeros()).max(1)
}

/// One rule inside a stored record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordEntry {
    pub rule_id: RuleId,
    pub antecedent_len: u32,
    /// Stored only when the layout carries antecedents; empty otherwise.
    pub antecedent: ItemSet,
    pub consequent: ItemSet,
    /// Plain weight on the server side, masked weight after retrieval.
    pub weight: Integer,
}

/// Largest values a layout must hold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LayoutBounds {
    pub entries: u32,
    pub rule_id: u32,
    pub antecedent_len: u32,
    pub item: ItemId,
    pub stored_antecedent: u32,
    pub consequent: u32,
}

impl LayoutBounds {
    pub fn include(&mut self, e: &RecordEntry, keep_antecedent: bool) {
        self.rule_id = self.rule_id.max(e.rule_id.0);
        self.antecedent_len = self.antecedent_len.max(e.antecedent_len);
        self.consequent = self.consequent.max(e.consequent.len() as u32);
        let mut top = e.consequent.max_item().unwrap_or(0);
        if keep_antecedent {
            self.stored_antecedent = self.stored_antecedent.max(e.antecedent.len() as u32);
            top = top.max(e.antecedent.max_item().unwrap_or(0));
        }
        self.item = self.item.max(top);
    }
}

/// Bit layout of a fixed-size record split into OT blocks of
/// `chunk_bits` bits. Fields never straddle a block boundary, so a value
/// added to one block cannot carry into the next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordLayout {
    pub chunk_bits: u32,
    pub fingerprint_bits: u32,
    pub entries: u32,
    pub id_bits: u32,
    pub len_bits: u32,
    pub item_bits: u32,
    pub max_antecedent: u32,
    pub max_consequent: u32,
    pub weight_bits: u32,
    /// `(block, shift, width)` of every field in storage order.
    places: Vec<(u32, u32, u32)>,
    chunks: u32,
}

struct Placer {
    chunk_bits: u32,
    chunk: u32,
    used: u32,
    out: Vec<(u32, u32, u32)>,
}

impl Placer {
    fn place(&mut self, width: u32) -> Result<(), ProtocolError> {
        if width > self.chunk_bits {
            return Err(ProtocolError::Layout("field wider than an OT block"));
        }
        if self.used + width > self.chunk_bits {
            self.chunk += 1;
            self.used = 0;
        }
        self.out.push((self.chunk, self.used, width));
        self.used += width;
        Ok(())
    }
}

impl RecordLayout {
    pub fn new(chunk_bits: u32, fingerprint_bits: u32, b: LayoutBounds) -> Result<Self, ProtocolError> {
        let mut l = RecordLayout {
            chunk_bits,
            fingerprint_bits,
            entries: b.entries.max(1),
            id_bits: bits_for(b.rule_id as u64),
            len_bits: bits_for(b.antecedent_len as u64),
            item_bits: bits_for(b.item as u64),
            max_antecedent: b.stored_antecedent,
            max_consequent: b.consequent,
            weight_bits: WEIGHT_FIELD_BITS,
            places: Vec::new(),
            chunks: 0,
        };
        l.compute()?;
        Ok(l)
    }

    /// Field widths in storage order.
    fn widths(&self) -> Vec<u32> {
        let mut w = vec![self.fingerprint_bits, bits_for(self.entries as u64)];
        for _ in 0..self.entries {
            w.extend([self.id_bits, self.len_bits]);
            if self.max_antecedent > 0 {
                w.push(bits_for(self.max_antecedent as u64));
                w.extend(std::iter::repeat(self.item_bits).take(self.max_antecedent as usize));
            }
            w.push(bits_for(self.max_consequent as u64));
            w.extend(std::iter::repeat(self.item_bits).take(self.max_consequent as usize));
            w.push(self.weight_bits);
        }
        w
    }

    fn compute(&mut self) -> Result<(), ProtocolError> {
        if self.entries > 1 << 16 || self.max_antecedent > 1 << 12 || self.max_consequent > 1 << 12 {
            return Err(ProtocolError::Layout("record too large"));
        }
        let mut p = Placer { chunk_bits: self.chunk_bits, chunk: 0, used: 0, out: Vec::new() };
        for w in self.widths() {
            p.place(w)?;
        }
        self.chunks = p.chunk + 1;
        self.places = p.out;
        Ok(())
    }

    /// OT blocks per record.
    pub fn chunks(&self) -> usize {
        self.chunks as usize
    }

    pub fn stores_antecedents(&self) -> bool {
        self.max_antecedent > 0
    }

    fn weight_fields(&self) -> impl Iterator<Item = usize> + '_ {
        let per = self.widths_per_entry();
        (0..self.entries as usize).map(move |e| 2 + e * per + per - 1)
    }

    /// Packs a fingerprint and up to `entries` rules into blocks.
    pub fn pack(&self, fingerprint: &[u8], entries: &[RecordEntry]) -> Result<Vec<Integer>, ProtocolError> {
        if entries.len() > self.entries as usize || fingerprint.len() * 8 != self.fingerprint_bits as usize {
            return Err(ProtocolError::Layout("record does not fit the layout"));
        }
        let mut vals: Vec<Integer> = Vec::with_capacity(self.places.len());
        vals.push(Integer::from_digits(fingerprint, Order::MsfBe));
        vals.push(Integer::from(entries.len()));
        let pad = |v: &mut Vec<Integer>, n: usize| v.extend(std::iter::repeat_with(Integer::new).take(n));
        for slot in 0..self.entries as usize {
            let Some(e) = entries.get(slot) else {
                pad(&mut vals, self.widths_per_entry());
                continue;
            };
            vals.push(Integer::from(e.rule_id.0));
            vals.push(Integer::from(e.antecedent_len));
            if self.max_antecedent > 0 {
                push_items(&mut vals, &e.antecedent, self.max_antecedent)?;
            }
            push_items(&mut vals, &e.consequent, self.max_consequent)?;
            vals.push(e.weight.clone());
        }
        let mut out = vec![Integer::new(); self.chunks()];
        for (v, &(c, shift, w)) in vals.into_iter().zip(&self.places) {
            if v < 0 || v.significant_bits() > w {
                return Err(ProtocolError::Layout("value wider than its field"));
            }
            out[c as usize] += v << shift;
        }
        Ok(out)
    }

    fn widths_per_entry(&self) -> usize {
        let items = if self.max_antecedent > 0 { 1 + self.max_antecedent as usize } else { 0 };
        2 + items + 1 + self.max_consequent as usize + 1
    }

    /// Per-block offsets that add `masks[e]` to the weight of entry `e`.
    pub fn weight_offsets(&self, masks: &[Integer]) -> Result<Vec<Integer>, ProtocolError> {
        if masks.len() != self.entries as usize {
            return Err(ProtocolError::Layout("one mask per entry"));
        }
        let mut out = vec![Integer::new(); self.chunks()];
        for (field, m) in self.weight_fields().zip(masks) {
            let (c, shift, _) = self.places[field];
            out[c as usize] += Integer::from(m << shift);
        }
        Ok(out)
    }

    /// Fingerprint field of a retrieved record.
    pub fn fingerprint(&self, blocks: &[Integer]) -> Result<Integer, ProtocolError> {
        if blocks.len() != self.chunks() {
            return Err(ProtocolError::Layout("block count"));
        }
        Ok(self.field(blocks, 0))
    }

    fn field(&self, blocks: &[Integer], i: usize) -> Integer {
        let (c, shift, w) = self.places[i];
        Integer::from(&blocks[c as usize] >> shift).keep_bits(w)
    }

    /// Decodes the entries of a retrieved record. Fails on malformed
    /// content, which callers treat as a miss.
    pub fn unpack(&self, blocks: &[Integer]) -> Result<Vec<RecordEntry>, ProtocolError> {
        if blocks.len() != self.chunks() {
            return Err(ProtocolError::Layout("block count"));
        }
        let small = |i: usize| self.field(blocks, i).to_u32().expect("fields are at most 32 bits wide");
        let count = small(1) as usize;
        if count > self.entries as usize {
            return Err(ProtocolError::Layout("entry count"));
        }
        let per = self.widths_per_entry();
        let mut out = Vec::with_capacity(count);
        for e in 0..count {
            let mut i = 2 + e * per;
            let rule_id = RuleId(small(i));
            let antecedent_len = small(i + 1);
            i += 2;
            let mut antecedent = ItemSet::empty();
            if self.max_antecedent > 0 {
                antecedent = read_items(small, i, self.max_antecedent)?;
                i += 1 + self.max_antecedent as usize;
            }
            let consequent = read_items(small, i, self.max_consequent)?;
            i += 1 + self.max_consequent as usize;
            out.push(RecordEntry { rule_id, antecedent_len, antecedent, consequent, weight: self.field(blocks, i) });
        }
        Ok(out)
    }

    pub fn write(&self, w: &mut Writer) {
        for v in [
            self.chunk_bits,
            self.fingerprint_bits,
            self.entries,
            self.id_bits,
            self.len_bits,
            self.item_bits,
            self.max_antecedent,
            self.max_consequent,
            self.weight_bits,
        ] {
            w.u32(v);
        }
    }

    pub fn read(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let mut v = [0u32; 9];
        for x in &mut v {
            *x = r.u32()?;
        }
        let [chunk_bits, fingerprint_bits, entries, id_bits, len_bits, item_bits, max_antecedent, max_consequent, weight_bits] = v;
        if [id_bits, len_bits, item_bits].iter().any(|&b| b == 0 || b > 32) || weight_bits != WEIGHT_FIELD_BITS || entries == 0 {
            return Err(WireError::Invalid("record layout"));
        }
        let mut l = RecordLayout {
            chunk_bits,
            fingerprint_bits,
            entries,
            id_bits,
            len_bits,
            item_bits,
            max_antecedent,
            max_consequent,
            weight_bits,
            places: Vec::new(),
            chunks: 0,
        };
        l.compute().map_err(|_| WireError::Invalid("record layout"))?;
        Ok(l)
    }
}

fn push_items(vals: &mut Vec<Integer>, s: &ItemSet, cap: u32) -> Result<(), ProtocolError> {
    if s.len() > cap as usize {
        return Err(ProtocolError::Layout("item list longer than the layout allows"));
    }
    vals.push(Integer::from(s.len()));
    vals.extend(s.iter().map(Integer::from));
    vals.extend(std::iter::repeat_with(Integer::new).take(cap as usize - s.len()));
    Ok(())
}

fn read_items(small: impl Fn(usize) -> u32, at: usize, cap: u32) -> Result<ItemSet, ProtocolError> {
    let n = small(at) as usize;
    if n > cap as usize {
        return Err(ProtocolError::Layout("item count"));
    }
    ItemSet::from_sorted((0..n).map(|k| small(at + 1 + k)).collect())
        .ok()
        .filter(|s| !s.contains(0))
        .ok_or(ProtocolError::Layout("item list"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::Reader;

    fn entry(id: u32, ant: &[u32], cons: &[u32], w: u64) -> RecordEntry {
        RecordEntry {
            rule_id: RuleId(id),
            antecedent_len: ant.len() as u32,
            antecedent: ItemSet::new(ant.iter().copied()),
            consequent: ItemSet::new(cons.iter().copied()),
            weight: Integer::from(w),
        }
    }

    fn bounds(entries: &[RecordEntry], keep: bool, slots: u32) -> LayoutBounds {
        let mut b = LayoutBounds { entries: slots, ..Default::default() };
        entries.iter().for_each(|e| b.include(e, keep));
        b
    }

    #[test]
    fn pack_unpack_round_trip() {
        let es = vec![entry(7, &[1, 4], &[2, 9], 300), entry(12, &[3], &[5], 1)];
        for keep in [false, true] {
            for chunk_bits in [120, 256, 1016] {
                let l = RecordLayout::new(chunk_bits, 64, bounds(&es, keep, 3)).unwrap();
                let blocks = l.pack(&[0xAB; 8], &es).unwrap();
                assert_eq!(blocks.len(), l.chunks());
                assert!(blocks.iter().all(|b| b.significant_bits() <= chunk_bits));
                assert_eq!(l.fingerprint(&blocks).unwrap(), Integer::from(0xABAB_ABAB_ABAB_ABABu64));
                let got = l.unpack(&blocks).unwrap();
                for (g, e) in got.iter().zip(&es) {
                    assert_eq!(g.rule_id, e.rule_id);
                    assert_eq!(g.consequent, e.consequent);
                    assert_eq!(g.weight, e.weight);
                    assert_eq!(g.antecedent.is_empty(), !keep);
                }
                assert_eq!(got.len(), 2);
            }
        }
    }

    #[test]
    fn offsets_add_to_weights_only() {
        let es = vec![entry(1, &[1], &[2], 10), entry(2, &[3], &[4], 20)];
        let l = RecordLayout::new(120, 64, bounds(&es, true, 2)).unwrap();
        let masks = [Integer::from(1u128 << 100), Integer::from(77)];
        let mut blocks = l.pack(&[1; 8], &es).unwrap();
        for (b, o) in blocks.iter_mut().zip(l.weight_offsets(&masks).unwrap()) {
            *b += o;
        }
        let got = l.unpack(&blocks).unwrap();
        assert_eq!(got[0].weight, Integer::from(10) + &masks[0]);
        assert_eq!(got[1].weight, Integer::from(97));
        assert_eq!(got[1].consequent, ItemSet::new([4]));
    }

    #[test]
    fn empty_block_reads_as_zero_fingerprint() {
        let l = RecordLayout::new(1016, 64, bounds(&[entry(5, &[1], &[2, 3], 1)], false, 1)).unwrap();
        let zero = vec![Integer::new(); l.chunks()];
        assert_eq!(l.fingerprint(&zero).unwrap(), 0);
        assert!(l.unpack(&zero).unwrap().is_empty());
    }

    #[test]
    fn rejects_oversized_values() {
        let l = RecordLayout::new(1016, 64, bounds(&[entry(5, &[1], &[2], 1)], false, 1)).unwrap();
        assert!(l.pack(&[0; 8], &[entry(5, &[1], &[2, 3], 1)]).is_err());
        assert!(l.pack(&[0; 8], &[entry(9, &[1], &[2], 1)]).is_err());
        assert!(RecordLayout::new(32, 64, LayoutBounds::default()).is_err());
    }

    #[test]
    fn serialization() {
        let l = RecordLayout::new(504, 128, bounds(&[entry(99, &[1, 2, 3], &[4], 1)], true, 4)).unwrap();
        let mut w = Writer::new();
        l.write(&mut w);
        let buf = w.finish();
        assert_eq!(RecordLayout::read(&mut Reader::new(&buf)).unwrap(), l);
    }
}
