#include "csl/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <openssl/evp.h>

#include "csl/errors.hpp"

namespace csl {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

Digest sha256(std::span<const std::uint8_t> bytes) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  return out;
}

std::string to_hex(const Digest& digest) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : digest) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 15]);
  }
  return s;
}

void ByteWriter::put_magic(const char (&magic)[5]) {
  buf_.insert(buf_.end(), magic, magic + 4);
}

void ByteWriter::put_u32(std::uint32_t v) {
  std::uint8_t b[4];
  std::memcpy(b, &v, 4);
  put_bytes(b);
}

void ByteWriter::put_u64(std::uint64_t v) {
  std::uint8_t b[8];
  std::memcpy(b, &v, 8);
  put_bytes(b);
}

void ByteWriter::put_f64(double v) {
  std::uint8_t b[8];
  std::memcpy(b, &v, 8);
  put_bytes(b);
}

Digest ByteWriter::seal() {
  const Digest h = sha256(buf_);
  put_bytes(h);
  return h;
}

void ByteReader::need(std::size_t n) const {
  if (!has(n)) throw CorruptionError("unexpected end of file");
}

bool ByteReader::magic_is(const char (&magic)[5]) {
  if (!has(4)) return false;
  const bool ok = std::memcmp(bytes_.data() + pos_, magic, 4) == 0;
  if (ok) pos_ += 4;
  return ok;
}

std::uint8_t ByteReader::get_u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t ByteReader::get_u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, bytes_.data() + pos_, 4);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::get_u64() {
  need(8);
  std::uint64_t v;
  std::memcpy(&v, bytes_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

double ByteReader::get_f64() {
  need(8);
  double v;
  std::memcpy(&v, bytes_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

Digest ByteReader::get_digest() {
  need(32);
  Digest d;
  std::memcpy(d.data(), bytes_.data() + pos_, 32);
  pos_ += 32;
  return d;
}

Digest verify_trailer(std::span<const std::uint8_t> file_bytes) {
  if (file_bytes.size() < 32) throw CorruptionError("file too short for digest trailer");
  const auto body = file_bytes.first(file_bytes.size() - 32);
  const Digest expected = sha256(body);
  if (std::memcmp(expected.data(), file_bytes.data() + body.size(), 32) != 0) {
    throw CorruptionError("content hash mismatch");
  }
  return expected;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace csl
