#pragma once

// Integer range coder and adaptive binary models. Encoder and decoder walk
// the same (range, total) trajectory, so the decoder consumes exactly the
// bytes the encoder produced and all state stays in lockstep.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scf {

// Decoder ran out of payload or hit an impossible symbol.
class CorruptStreamError : public std::runtime_error {
public:
    CorruptStreamError(const std::string& what, size_t byte_offset)
        : std::runtime_error(what + " (payload byte " + std::to_string(byte_offset) + ")"),
          offset_(byte_offset) {}

    size_t offset() const { return offset_; }

private:
    size_t offset_;
};

// Ideal arithmetic-coding cost in bits of a symbol with count freq out of total.
inline double self_information_bits(uint32_t freq, uint32_t total) {
    if (freq == 0 || freq > total)
        throw std::logic_error("self_information_bits: zero-frequency symbol");
    return std::log2(double(total) / double(freq));
}

// Range coder over 64-bit state with byte-wise renormalization and frequency
// totals capped at 2^16. The wide state keeps the per-symbol truncation loss
// below 2^-40 bits, so removing probability mass from a model can never be
// beaten by rounding noise. Carries are resolved through a cache/pending-byte
// chain; the initial cache byte is provably zero and is not emitted, leaving
// a flush tail of at most 8 bytes.
class RangeEncoder {
public:
    static constexpr uint32_t kMaxTotal = 1u << 16;

    void encode(uint32_t cum, uint32_t freq, uint32_t total) {
        if (freq == 0)
            throw std::logic_error("RangeEncoder: zero-frequency symbol");
        if (total == 0 || total > kMaxTotal || uint64_t(cum) + freq > total)
            throw std::logic_error("RangeEncoder: invalid frequency view");
        const uint64_t r = range_ / total;
        low_ += static_cast<unsigned __int128>(r) * cum;
        range_ = r * freq;
        while (range_ < kTopValue) {
            shift_low();
            range_ <<= 8;
        }
    }

    size_t bytes_pending() const { return out_.size(); }

    // Seals the stream; appends at most 8 tail bytes.
    std::vector<uint8_t> finish() {
        for (int i = 0; i < 9; ++i) shift_low();
        return std::move(out_);
    }

private:
    static constexpr uint64_t kTopValue = 1ull << 56;

    void shift_low() {
        const auto carry = static_cast<uint64_t>(low_ >> 64);
        if (carry != 0 || low_ < (static_cast<unsigned __int128>(0xFF) << 56)) {
            emit(static_cast<uint8_t>(cache_ + carry));
            for (; pending_ > 0; --pending_) emit(static_cast<uint8_t>(0xFF + carry));
            cache_ = static_cast<uint8_t>(static_cast<uint64_t>(low_) >> 56);
        } else {
            ++pending_;
        }
        low_ = static_cast<unsigned __int128>(static_cast<uint64_t>(low_) << 8);
    }

    void emit(uint8_t byte) {
        if (first_) {
            assert(byte == 0);
            first_ = false;
            return;
        }
        out_.push_back(byte);
    }

    unsigned __int128 low_ = 0;
    uint64_t range_ = ~0ull;
    uint64_t pending_ = 0;
    uint8_t cache_ = 0;
    bool first_ = true;
    std::vector<uint8_t> out_;
};

class RangeDecoder {
public:
    explicit RangeDecoder(std::span<const uint8_t> payload) : data_(payload) {
        for (int i = 0; i < 8; ++i) code_ = (code_ << 8) | next_byte();
    }
    // the decoder only views the payload; it must outlive the decoder
    explicit RangeDecoder(std::vector<uint8_t>&&) = delete;

    // Maps the code point into [0, total). Must be followed by a consume()
    // call with the same total.
    uint32_t decode_target(uint32_t total) {
        assert(total >= 1 && total <= RangeEncoder::kMaxTotal);
        r_ = range_ / total;
        const uint64_t t = code_ / r_;
        return t >= total ? total - 1 : static_cast<uint32_t>(t);
    }

    void consume(uint32_t cum, uint32_t freq, uint32_t total) {
        (void)total;
        assert(freq >= 1 && uint64_t(cum) + freq <= total);
        code_ -= r_ * cum;
        range_ = r_ * freq;
        while (range_ < kTopValue) {
            code_ = (code_ << 8) | next_byte();
            range_ <<= 8;
        }
    }

    size_t position() const { return pos_; }

private:
    static constexpr uint64_t kTopValue = 1ull << 56;

    uint64_t next_byte() {
        if (pos_ >= data_.size())
            throw CorruptStreamError("payload exhausted", pos_);
        return data_[pos_++];
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
    uint64_t range_ = ~0ull;
    uint64_t code_ = 0;
    uint64_t r_ = 0;
};

// Two-counter adaptive model for flags. Starts at (1,1), increments by one,
// halves both counts (rounding up) when their sum exceeds 2^12.
class AdaptiveBit {
public:
    void encode(RangeEncoder& enc, bool bit) {
        const uint32_t total = zero_ + one_;
        if (bit)
            enc.encode(zero_, one_, total);
        else
            enc.encode(0, zero_, total);
        update(bit);
    }

    bool decode(RangeDecoder& dec) {
        const uint32_t total = zero_ + one_;
        const bool bit = dec.decode_target(total) >= zero_;
        if (bit)
            dec.consume(zero_, one_, total);
        else
            dec.consume(0, zero_, total);
        update(bit);
        return bit;
    }

    // Model step without emitting bits; used when a flag's value is implied.
    // Keeping implied flags in the model makes every toggled-off variant see
    // the exact same flag statistics as the toggled-on one.
    void update(bool bit) {
        (bit ? one_ : zero_) += 1;
        if (zero_ + one_ > kRescaleLimit) {
            zero_ = (zero_ + 1) >> 1;
            one_ = (one_ + 1) >> 1;
        }
    }

    double cost_bits(bool bit) const {
        return self_information_bits(bit ? one_ : zero_, zero_ + one_);
    }

    uint32_t zero_count() const { return zero_; }
    uint32_t one_count() const { return one_; }

    void append_canonical(std::vector<uint8_t>& out) const {
        for (uint32_t v : {zero_, one_})
            for (int s = 0; s < 32; s += 8) out.push_back(uint8_t(v >> s));
    }

private:
    static constexpr uint32_t kRescaleLimit = 1u << 12;

    uint32_t zero_ = 1;
    uint32_t one_ = 1;
};

}  // namespace scf
