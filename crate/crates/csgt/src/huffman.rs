//! Canonical Huffman coding of quantization indices.
//!
//! Only code lengths are transmitted; both sides derive the same codes
//! by assigning consecutive values to symbols sorted by (length, symbol).

use crate::error::{CodecError, Result};

/// Code lengths per symbol, zero meaning the symbol never occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTable {
    lengths: Vec<u8>,
}

impl HuffmanTable {
    /// Builds optimal code lengths from symbol counts. Ties merge the
    /// candidates containing the lowest symbol first, so the table is a
    /// pure function of the histogram.
    pub fn build(counts: &[u64]) -> Result<Self> {
        if counts.iter().all(|&c| c == 0) {
            return Err(CodecError::EmptyInput("huffman histogram"));
        }
        let live: Vec<usize> = (0..counts.len()).filter(|&s| counts[s] > 0).collect();
        let mut lengths = vec![0u8; counts.len()];
        if live.len() == 1 {
            lengths[live[0]] = 1;
            return Ok(Self { lengths });
        }

        // Each heap entry is (count, lowest contained symbol, node id).
        // Internal nodes record their children for the depth walk later.
        let mut heap = std::collections::BinaryHeap::new();
        let mut children: Vec<Option<(usize, usize)>> = Vec::new();
        for &s in &live {
            heap.push(std::cmp::Reverse((counts[s], s, children.len())));
            children.push(None);
        }
        while heap.len() > 1 {
            let std::cmp::Reverse((c1, s1, n1)) = heap.pop().unwrap();
            let std::cmp::Reverse((c2, s2, n2)) = heap.pop().unwrap();
            heap.push(std::cmp::Reverse((c1 + c2, s1.min(s2), children.len())));
            children.push(Some((n1, n2)));
        }

        let std::cmp::Reverse((_, _, root)) = heap.pop().unwrap();
        let mut stack = vec![(root, 0u8)];
        while let Some((node, depth)) = stack.pop() {
            match children[node] {
                Some((l, r)) => {
                    stack.push((l, depth + 1));
                    stack.push((r, depth + 1));
                }
                None => lengths[live[node]] = depth,
            }
        }
        Ok(Self { lengths })
    }

    /// Restores a table from transmitted lengths, validating the Kraft
    /// inequality so a corrupt table cannot drive the decoder out of
    /// bounds.
    pub fn from_lengths(lengths: Vec<u8>) -> Result<Self> {
        if lengths.iter().all(|&l| l == 0) {
            return Err(CodecError::EmptyInput("huffman code lengths"));
        }
        let mut kraft = 0u128;
        let max_len = *lengths.iter().max().unwrap() as u32;
        for &l in &lengths {
            if l > 0 {
                kraft += 1u128 << (max_len - l as u32);
            }
        }
        if kraft > 1u128 << max_len {
            return Err(CodecError::MalformedBitstream(
                "code lengths violate the Kraft inequality".into(),
            ));
        }
        Ok(Self { lengths })
    }

    pub fn lengths(&self) -> &[u8] {
        &self.lengths
    }

    pub fn length_of(&self, symbol: u16) -> Option<u8> {
        match self.lengths.get(symbol as usize) {
            Some(&l) if l > 0 => Some(l),
            _ => None,
        }
    }

    /// Average code length in bits weighted by the given counts.
    pub fn average_length(&self, counts: &[u64]) -> f64 {
        let mut bits = 0u64;
        let mut total = 0u64;
        for (s, &c) in counts.iter().enumerate() {
            bits += c * u64::from(self.lengths[s]);
            total += c;
        }
        if total == 0 {
            0.0
        } else {
            bits as f64 / total as f64
        }
    }

    /// Canonical code per symbol, `(code, length)` with zero-length
    /// entries for absent symbols. Codes are assigned in (length, symbol)
    /// order.
    fn canonical_codes(&self) -> Vec<(u32, u8)> {
        let mut order: Vec<u16> = (0..self.lengths.len() as u16)
            .filter(|&s| self.lengths[s as usize] > 0)
            .collect();
        order.sort_by_key(|&s| (self.lengths[s as usize], s));
        let mut codes = vec![(0u32, 0u8); self.lengths.len()];
        let mut code = 0u32;
        let mut prev_len = 0u8;
        for &s in &order {
            let len = self.lengths[s as usize];
            code <<= len - prev_len;
            codes[s as usize] = (code, len);
            code += 1;
            prev_len = len;
        }
        codes
    }
}

/// Packs the canonical codes of `indices` most-significant-bit first,
/// zero-padding the final byte. Returns the bytes and the exact bit
/// count before padding.
pub fn encode_indices(indices: &[u16], table: &HuffmanTable) -> Result<(Vec<u8>, u64)> {
    let codes = table.canonical_codes();
    let mut bytes = Vec::new();
    let mut acc = 0u64;
    let mut n_acc = 0u32;
    let mut total_bits = 0u64;
    for &s in indices {
        let (code, len) = *codes
            .get(s as usize)
            .filter(|&&(_, len)| len > 0)
            .ok_or(CodecError::MissingCode(s))?;
        acc = (acc << len) | u64::from(code);
        n_acc += u32::from(len);
        total_bits += u64::from(len);
        while n_acc >= 8 {
            n_acc -= 8;
            bytes.push((acc >> n_acc) as u8);
        }
    }
    if n_acc > 0 {
        bytes.push((acc << (8 - n_acc)) as u8);
    }
    Ok((bytes, total_bits))
}

/// Decodes exactly `count` symbols from an MSB-first payload of
/// `bit_count` meaningful bits, then checks that nothing but zero
/// padding remains.
pub fn decode_indices(
    payload: &[u8],
    bit_count: u64,
    table: &HuffmanTable,
    count: usize,
) -> Result<Vec<u16>> {
    if bit_count > payload.len() as u64 * 8 {
        return Err(CodecError::MalformedBitstream(format!(
            "payload of {} bytes cannot hold {bit_count} bits",
            payload.len()
        )));
    }

    // Canonical decode tables: per length, the first code value and the
    // symbols of that length in order.
    let max_len = *table.lengths().iter().max().unwrap() as usize;
    let mut symbols_at: Vec<Vec<u16>> = vec![Vec::new(); max_len + 1];
    for (s, &l) in table.lengths().iter().enumerate() {
        if l > 0 {
            symbols_at[l as usize].push(s as u16);
        }
    }
    let codes = table.canonical_codes();
    let first_code: Vec<u32> = (0..=max_len)
        .map(|l| symbols_at[l].first().map_or(0, |&s| codes[s as usize].0))
        .collect();

    let bit_at = |i: u64| (payload[(i / 8) as usize] >> (7 - (i % 8) as u32)) & 1;

    let mut out = Vec::with_capacity(count);
    let mut pos = 0u64;
    while out.len() < count {
        let mut code = 0u32;
        let mut len = 0usize;
        loop {
            if pos >= bit_count {
                return Err(CodecError::PayloadExhausted { decoded: out.len(), expected: count });
            }
            code = (code << 1) | u32::from(bit_at(pos));
            pos += 1;
            len += 1;
            if len > max_len {
                return Err(CodecError::MalformedBitstream(
                    "bit pattern matches no code".into(),
                ));
            }
            let n = symbols_at[len].len() as u32;
            if n > 0 && code >= first_code[len] && code - first_code[len] < n {
                out.push(symbols_at[len][(code - first_code[len]) as usize]);
                break;
            }
        }
    }
    if pos != bit_count {
        return Err(CodecError::TrailingGarbage);
    }
    for i in bit_count..payload.len() as u64 * 8 {
        if bit_at(i) != 0 {
            return Err(CodecError::TrailingGarbage);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::empirical_entropy;
    use crate::rng::SeededRng;

    #[test]
    fn two_equal_symbols_get_one_bit_each() {
        let t = HuffmanTable::build(&[1, 1]).unwrap();
        assert_eq!(t.lengths(), &[1, 1]);
    }

    #[test]
    fn skewed_three_symbol_lengths() {
        // Hand-run: merge the two singletons, then the pair with A.
        let t = HuffmanTable::build(&[5, 1, 1]).unwrap();
        assert_eq!(t.lengths(), &[1, 2, 2]);
    }

    #[test]
    fn single_symbol_gets_length_one() {
        let t = HuffmanTable::build(&[0, 7, 0]).unwrap();
        assert_eq!(t.lengths(), &[0, 1, 0]);
    }

    #[test]
    fn all_zero_histogram_is_rejected() {
        assert!(HuffmanTable::build(&[0, 0, 0]).is_err());
    }

    #[test]
    fn tie_break_is_deterministic() {
        let counts = vec![3u64; 7];
        let a = HuffmanTable::build(&counts).unwrap();
        let b = HuffmanTable::build(&counts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn codes_satisfy_kraft_equality() {
        let mut rng = SeededRng::new(6);
        let counts: Vec<u64> = (0..64).map(|_| rng.next_index(1000) as u64 + 1).collect();
        let t = HuffmanTable::build(&counts).unwrap();
        let kraft: f64 = t.lengths().iter().map(|&l| 0.5f64.powi(l as i32)).sum();
        assert!((kraft - 1.0).abs() < 1e-12, "kraft sum {kraft}");
    }

    #[test]
    fn no_code_is_prefix_of_another() {
        let mut rng = SeededRng::new(61);
        let counts: Vec<u64> = (0..40).map(|_| rng.next_index(500) as u64).collect();
        let t = HuffmanTable::build(&counts).unwrap();
        let codes = t.canonical_codes();
        let live: Vec<(u32, u8)> = codes.iter().copied().filter(|&(_, l)| l > 0).collect();
        for (i, &(c1, l1)) in live.iter().enumerate() {
            for &(c2, l2) in &live[i + 1..] {
                let (short, slen, long, llen) =
                    if l1 <= l2 { (c1, l1, c2, l2) } else { (c2, l2, c1, l1) };
                assert!(
                    long >> (llen - slen) != short || slen == llen,
                    "prefix violation"
                );
            }
        }
    }

    #[test]
    fn average_length_within_one_bit_of_entropy() {
        let mut rng = SeededRng::new(13);
        for _ in 0..20 {
            let counts: Vec<u64> =
                (0..64).map(|_| rng.next_index(10_000) as u64).collect();
            if counts.iter().all(|&c| c == 0) {
                continue;
            }
            let t = HuffmanTable::build(&counts).unwrap();
            let mut symbols = Vec::new();
            for (s, &c) in counts.iter().enumerate() {
                symbols.extend(std::iter::repeat_n(s as u16, c as usize % 97));
            }
            if symbols.is_empty() {
                continue;
            }
            let mut hist = vec![0u64; 64];
            for &s in &symbols {
                hist[s as usize] += 1;
            }
            let t2 = HuffmanTable::build(&hist).unwrap();
            let avg = t2.average_length(&hist);
            let h = empirical_entropy(&symbols);
            assert!(avg >= h - 1e-9, "avg {avg} below entropy {h}");
            assert!(avg <= h + 1.0, "avg {avg} exceeds entropy {h} + 1");
            drop(t);
        }
    }

    #[test]
    fn three_bit_payload_for_three_unit_codes() {
        let t = HuffmanTable::build(&[1, 1]).unwrap();
        let (bytes, bits) = encode_indices(&[0, 0, 1], &t).unwrap();
        assert_eq!(bits, 3);
        assert_eq!(bytes.len(), 1);
    }

    #[test]
    fn empty_index_list_gives_empty_payload() {
        let t = HuffmanTable::build(&[1, 1]).unwrap();
        let (bytes, bits) = encode_indices(&[], &t).unwrap();
        assert!(bytes.is_empty());
        assert_eq!(bits, 0);
        let decoded = decode_indices(&bytes, bits, &t, 0).unwrap();
        assert!(decoded.is_empty());
    }

    #[test]
    fn encoding_unknown_symbol_fails() {
        let t = HuffmanTable::build(&[1, 0, 1]).unwrap();
        assert!(matches!(
            encode_indices(&[1], &t),
            Err(CodecError::MissingCode(1))
        ));
    }

    #[test]
    fn roundtrip_randomized() {
        let mut rng = SeededRng::new(1234);
        for trial in 0..200 {
            let alphabet = 2 + rng.next_index(62);
            let n = 1 + rng.next_index(400);
            // Skewed counts so lengths vary.
            let indices: Vec<u16> = (0..n)
                .map(|_| {
                    let r = rng.next_f64();
                    ((r * r * alphabet as f64) as usize).min(alphabet - 1) as u16
                })
                .collect();
            let mut counts = vec![0u64; alphabet];
            for &i in &indices {
                counts[i as usize] += 1;
            }
            let t = HuffmanTable::build(&counts).unwrap();
            let (bytes, bits) = encode_indices(&indices, &t).unwrap();
            let back = decode_indices(&bytes, bits, &t, indices.len()).unwrap();
            assert_eq!(back, indices, "trial {trial}");
        }
    }

    #[test]
    fn truncated_payload_is_detected() {
        let t = HuffmanTable::build(&[1, 1]).unwrap();
        let (bytes, bits) = encode_indices(&[0, 1, 0, 1, 0, 1, 0, 1, 0], &t).unwrap();
        assert!(matches!(
            decode_indices(&bytes[..1], 8, &t, 9),
            Err(CodecError::PayloadExhausted { .. })
        ));
        assert!(decode_indices(&bytes, bits, &t, 9).is_ok());
    }

    #[test]
    fn extra_bits_beyond_symbols_are_garbage() {
        let t = HuffmanTable::build(&[1, 1]).unwrap();
        let (bytes, bits) = encode_indices(&[0, 1, 0, 1], &t).unwrap();
        assert!(matches!(
            decode_indices(&bytes, bits, &t, 3),
            Err(CodecError::TrailingGarbage)
        ));
    }

    #[test]
    fn nonzero_padding_is_garbage() {
        let t = HuffmanTable::build(&[1, 1]).unwrap();
        let (mut bytes, bits) = encode_indices(&[0, 0, 0], &t).unwrap();
        bytes[0] |= 0x01;
        assert!(matches!(
            decode_indices(&bytes, bits, &t, 3),
            Err(CodecError::TrailingGarbage)
        ));
    }

    #[test]
    fn from_lengths_rejects_kraft_violation() {
        // Three one-bit codes cannot coexist.
        assert!(HuffmanTable::from_lengths(vec![1, 1, 1]).is_err());
        assert!(HuffmanTable::from_lengths(vec![1, 2, 2]).is_ok());
        assert!(HuffmanTable::from_lengths(vec![0, 0]).is_err());
    }

    #[test]
    fn lengths_survive_transmission() {
        let counts: Vec<u64> = vec![90, 40, 20, 10, 5, 5, 0, 1];
        let t = HuffmanTable::build(&counts).unwrap();
        let t2 = HuffmanTable::from_lengths(t.lengths().to_vec()).unwrap();
        assert_eq!(t, t2);
        let indices = [0u16, 1, 2, 3, 4, 5, 7, 0];
        let (bytes, bits) = encode_indices(&indices, &t).unwrap();
        assert_eq!(decode_indices(&bytes, bits, &t2, 8).unwrap(), indices);
    }

    fn arbitrary_index_stream() -> impl proptest::strategy::Strategy<Value = (u8, Vec<u16>)> {
        use proptest::strategy::Strategy;
        (1u8..=10).prop_flat_map(|b| {
            let n = 1u16 << b;
            let indices = proptest::collection::vec(0..n, 1..300);
            (proptest::strategy::Just(b), indices)
        })
    }

    proptest::proptest! {
        #[test]
        fn arbitrary_streams_roundtrip_through_transmitted_lengths(
            (bit_depth, indices) in arbitrary_index_stream(),
        ) {
            let mut counts = vec![0u64; 1 << bit_depth];
            for &i in &indices {
                counts[i as usize] += 1;
            }
            let t = HuffmanTable::build(&counts).unwrap();
            let t2 = HuffmanTable::from_lengths(t.lengths().to_vec()).unwrap();
            let (bytes, bits) = encode_indices(&indices, &t).unwrap();
            let back = decode_indices(&bytes, bits, &t2, indices.len()).unwrap();
            proptest::prop_assert_eq!(back, indices);
        }
    }
}
