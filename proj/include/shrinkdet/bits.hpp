#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace shrinkdet {

// MSB-first bit stream used by the residual coder.
class BitWriter {
public:
    void put(uint64_t bits, unsigned width) {
        for (unsigned i = width; i-- > 0;)
            put_bit((bits >> i) & 1u);
    }

    void put_bit(unsigned bit) {
        if (fill_ == 0) {
            bytes_.push_back(0);
            fill_ = 8;
        }
        --fill_;
        if (bit) bytes_.back() |= static_cast<uint8_t>(1u << fill_);
    }

    const std::vector<uint8_t>& bytes() const { return bytes_; }
    std::vector<uint8_t> take() { fill_ = 0; return std::move(bytes_); }

private:
    std::vector<uint8_t> bytes_;
    unsigned fill_ = 0;  // free bits in the last byte
};

class BitReader {
public:
    BitReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
    explicit BitReader(const std::vector<uint8_t>& v) : BitReader(v.data(), v.size()) {}

    uint64_t get(unsigned width) {
        uint64_t out = 0;
        for (unsigned i = 0; i < width; ++i)
            out = (out << 1) | get_bit();
        return out;
    }

    unsigned get_bit() {
        const size_t byte = pos_ >> 3;
        if (byte >= size_) throw std::runtime_error("bit stream truncated");
        const unsigned bit = (data_[byte] >> (7 - (pos_ & 7))) & 1u;
        ++pos_;
        return bit;
    }

private:
    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

// Little-endian byte-buffer primitives for the archive format.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) { raw_le(v); }
    void u32(uint32_t v) { raw_le(v); }
    void u64(uint64_t v) { raw_le(v); }
    void i32(int32_t v) { raw_le(static_cast<uint32_t>(v)); }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        raw_le(bits);
    }
    void bytes(const std::vector<uint8_t>& b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    template <typename T>
    void raw_le(T v) {
        for (size_t i = 0; i < sizeof(T); ++i)
            buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    std::vector<uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

    uint8_t u8() { return take_le<uint8_t>(); }
    uint16_t u16() { return take_le<uint16_t>(); }
    uint32_t u32() { return take_le<uint32_t>(); }
    uint64_t u64() { return take_le<uint64_t>(); }
    int32_t i32() { return static_cast<int32_t>(take_le<uint32_t>()); }
    double f64() {
        uint64_t bits = take_le<uint64_t>();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::vector<uint8_t> bytes(size_t count) {
        require(count);
        std::vector<uint8_t> out(data_ + pos_, data_ + pos_ + count);
        pos_ += count;
        return out;
    }
    size_t remaining() const { return size_ - pos_; }

private:
    template <typename T>
    T take_le() {
        require(sizeof(T));
        T v = 0;
        for (size_t i = 0; i < sizeof(T); ++i)
            v = static_cast<T>(v | (static_cast<uint64_t>(data_[pos_ + i]) << (8 * i)));
        pos_ += sizeof(T);
        return v;
    }

    void require(size_t count) const {
        if (pos_ + count > size_)
            throw std::runtime_error("archive truncated at byte " + std::to_string(pos_));
    }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
};

}  // namespace shrinkdet
