#include "mvb2b/hash.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "mvb2b/error.hpp"

namespace mvb2b {

static_assert(std::endian::native == std::endian::little, "byte images assume little-endian");

struct Sha256::Impl {
    EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
    impl_->ctx = EVP_MD_CTX_new();
    if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest initialisation failed");
}

Sha256::~Sha256() { EVP_MD_CTX_free(impl_->ctx); }

Sha256& Sha256::update(std::span<const std::byte> bytes) {
    EVP_DigestUpdate(impl_->ctx, bytes.data(), bytes.size());
    return *this;
}

Sha256& Sha256::update(std::string_view text) {
    update(static_cast<std::uint64_t>(text.size()));
    return update(std::as_bytes(std::span(text.data(), text.size())));
}

Sha256& Sha256::update(double v) { return update(std::as_bytes(std::span(&v, 1))); }

Sha256& Sha256::update(std::span<const double> values) {
    update(static_cast<std::uint64_t>(values.size()));
    return update(std::as_bytes(values));
}

Sha256& Sha256::update(std::uint64_t v) { return update(std::as_bytes(std::span(&v, 1))); }

std::string Sha256::hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(impl_->ctx, digest, &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_hex(std::string_view text) {
    Sha256 h;
    h.update(std::as_bytes(std::span(text.data(), text.size())));
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    Sha256 h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got) h.update(std::as_bytes(std::span(buf, got)));
    }
    return h.hex();
}

}  // namespace mvb2b
