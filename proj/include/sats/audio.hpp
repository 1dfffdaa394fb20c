#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sats/error.hpp"

namespace sats {

struct AudioBuffer {
    std::vector<float> samples;  // mono
    int sample_rate = 16000;

    double duration() const {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
    }
};

// ─── WAV I/O ─────────────────────────────────────────────────────────────────
//
// Reader accepts PCM16 and IEEE float32, any channel count (channels are
// averaged to mono). Writer emits mono 16-bit PCM.

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}
inline std::uint16_t read_u16le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
inline void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}
inline void put_u16le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace detail

inline AudioBuffer parse_wav(const std::string& bytes, const std::string& origin = "<memory>") {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t n = bytes.size();
    if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
        throw Error(ErrorKind::BadAudioFile, origin + ": not a RIFF/WAVE file");

    int channels = 0, sample_rate = 0, bits = 0, format = 0;
    std::size_t data_off = 0, data_len = 0;
    std::size_t off = 12;
    while (off + 8 <= n) {
        const std::uint32_t chunk_len = detail::read_u32le(p + off + 4);
        if (std::memcmp(p + off, "fmt ", 4) == 0 && off + 8 + 16 <= n) {
            format = detail::read_u16le(p + off + 8);
            channels = detail::read_u16le(p + off + 10);
            sample_rate = static_cast<int>(detail::read_u32le(p + off + 12));
            bits = detail::read_u16le(p + off + 22);
        } else if (std::memcmp(p + off, "data", 4) == 0) {
            data_off = off + 8;
            data_len = std::min<std::size_t>(chunk_len, n - data_off);
        }
        off += 8 + chunk_len + (chunk_len & 1);
    }
    if (channels <= 0 || sample_rate <= 0 || data_off == 0)
        throw Error(ErrorKind::BadAudioFile, origin + ": missing fmt/data chunk");

    AudioBuffer out;
    out.sample_rate = sample_rate;
    const std::size_t ch = static_cast<std::size_t>(channels);
    if (format == 1 && bits == 16) {
        const std::size_t frames = data_len / (2 * ch);
        out.samples.resize(frames);
        for (std::size_t f = 0; f < frames; ++f) {
            double acc = 0.0;
            for (std::size_t c = 0; c < ch; ++c) {
                const unsigned char* sp = p + data_off + (f * ch + c) * 2;
                const std::int16_t s = static_cast<std::int16_t>(detail::read_u16le(sp));
                acc += s / 32768.0;
            }
            out.samples[f] = static_cast<float>(acc / static_cast<double>(ch));
        }
    } else if (format == 3 && bits == 32) {
        const std::size_t frames = data_len / (4 * ch);
        out.samples.resize(frames);
        for (std::size_t f = 0; f < frames; ++f) {
            double acc = 0.0;
            for (std::size_t c = 0; c < ch; ++c) {
                std::uint32_t u = detail::read_u32le(p + data_off + (f * ch + c) * 4);
                float v;
                std::memcpy(&v, &u, 4);
                acc += v;
            }
            out.samples[f] = static_cast<float>(acc / static_cast<double>(ch));
        }
    } else {
        throw Error(ErrorKind::BadAudioFile,
                    origin + ": unsupported format (want PCM16 or float32), format=" +
                        std::to_string(format) + " bits=" + std::to_string(bits));
    }
    return out;
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_wav(bytes, path.string());
}

// Mono 16-bit PCM WAV serialization; values outside [-1, 1] clip.
inline std::string wav_bytes(const AudioBuffer& audio) {
    std::string out;
    const std::uint32_t data_len = static_cast<std::uint32_t>(audio.samples.size() * 2);
    out.reserve(44 + data_len);
    out += "RIFF";
    detail::put_u32le(out, 36 + data_len);
    out += "WAVEfmt ";
    detail::put_u32le(out, 16);
    detail::put_u16le(out, 1);  // PCM
    detail::put_u16le(out, 1);  // mono
    detail::put_u32le(out, static_cast<std::uint32_t>(audio.sample_rate));
    detail::put_u32le(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
    detail::put_u16le(out, 2);
    detail::put_u16le(out, 16);
    out += "data";
    detail::put_u32le(out, data_len);
    for (float v : audio.samples) {
        double x = static_cast<double>(v);
        if (x > 1.0) x = 1.0;
        if (x < -1.0) x = -1.0;
        const long q = std::lround(x * 32767.0);
        detail::put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    const std::string bytes = wav_bytes(audio);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ─── Resampling ──────────────────────────────────────────────────────────────

// Linear interpolation; adequate for pool conditioning.
inline AudioBuffer resample(const AudioBuffer& in, int target_rate) {
    if (in.sample_rate == target_rate || in.samples.empty()) {
        AudioBuffer out = in;
        out.sample_rate = target_rate;
        return out;
    }
    AudioBuffer out;
    out.sample_rate = target_rate;
    const double ratio = static_cast<double>(in.sample_rate) / target_rate;
    const std::size_t out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(in.samples.size()) / ratio));
    out.samples.resize(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double pos = i * ratio;
        const std::size_t i0 = std::min(static_cast<std::size_t>(pos), in.samples.size() - 1);
        const std::size_t i1 = std::min(i0 + 1, in.samples.size() - 1);
        const double frac = pos - static_cast<double>(i0);
        out.samples[i] = static_cast<float>((1.0 - frac) * in.samples[i0] + frac * in.samples[i1]);
    }
    return out;
}

// ─── Energy ──────────────────────────────────────────────────────────────────

// RMS over [center - half, center + half), clamped to the signal bounds.
inline double rms_around(const std::vector<float>& samples, std::int64_t center,
                         std::int64_t half) {
    const std::int64_t n = static_cast<std::int64_t>(samples.size());
    const std::int64_t a = std::max<std::int64_t>(0, center - half);
    const std::int64_t b = std::min<std::int64_t>(n, center + half);
    if (b <= a) return 0.0;
    double acc = 0.0;
    for (std::int64_t i = a; i < b; ++i)
        acc += static_cast<double>(samples[i]) * samples[i];
    return std::sqrt(acc / static_cast<double>(b - a));
}

// ─── Convolution ─────────────────────────────────────────────────────────────

namespace detail {

// Iterative radix-2 FFT, in place.
inline void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * 3.141592653589793238462643383279502884 /
                           static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

}  // namespace detail

// Full convolution (length |x| + |h| - 1). Short kernels run the exact direct
// form; long kernels go through the FFT.
inline std::vector<float> convolve(const std::vector<float>& x, const std::vector<float>& h) {
    if (x.empty() || h.empty()) return {};
    const std::size_t out_len = x.size() + h.size() - 1;
    std::vector<float> out(out_len, 0.0f);
    if (h.size() <= 64) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double xi = x[i];
            for (std::size_t k = 0; k < h.size(); ++k)
                out[i + k] += static_cast<float>(xi * h[k]);
        }
        return out;
    }
    std::size_t n = 1;
    while (n < out_len) n <<= 1;
    std::vector<std::complex<double>> fx(n), fh(n);
    for (std::size_t i = 0; i < x.size(); ++i) fx[i] = x[i];
    for (std::size_t i = 0; i < h.size(); ++i) fh[i] = h[i];
    detail::fft(fx, false);
    detail::fft(fh, false);
    for (std::size_t i = 0; i < n; ++i) fx[i] *= fh[i];
    detail::fft(fx, true);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = static_cast<float>(fx[i].real());
    return out;
}

// Shift so the strongest tap sits at t=0 and scale it to unit magnitude.
inline std::vector<float> prepare_rir(const std::vector<float>& h) {
    if (h.empty()) return {};
    std::size_t peak = 0;
    for (std::size_t i = 1; i < h.size(); ++i)
        if (std::fabs(h[i]) > std::fabs(h[peak])) peak = i;
    const double mag = std::fabs(h[peak]);
    if (mag == 0.0) return {};
    std::vector<float> out(h.begin() + static_cast<std::ptrdiff_t>(peak), h.end());
    for (auto& v : out) v = static_cast<float>(v / mag);
    return out;
}

}  // namespace sats
