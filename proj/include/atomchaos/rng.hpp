// Copyright 2026 The atomchaos Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace atomchaos {

// Random stream identified by (master seed, stream index).
//
// The engine state is a pure function of the identifier, so a trajectory
// draws the same sequence no matter which worker runs it or in which order.
// Boost distributions are used because their output, unlike the standard
// library's, is specified bit-for-bit across platforms.
class RngStream {
public:
    using engine_type = std::mt19937_64;

    RngStream(std::uint64_t master_seed, std::uint64_t index)
        : seed_(master_seed), index_(index), engine_(make_engine(master_seed, index))
    {
    }

    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] std::uint64_t index() const { return index_; }

    // Uniform on [0, 1).
    double uniform() { return boost::random::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    // Uniform on [a, b).
    double uniform(double a, double b) { return boost::random::uniform_real_distribution<double>(a, b)(engine_); }

    // Uniform on (0, 1]; safe as the argument of a logarithm.
    double uniform_open_zero() { return 1.0 - uniform(); }

    double normal(double mean, double sigma)
    {
        return boost::random::normal_distribution<double>(mean, sigma)(engine_);
    }

    engine_type& engine() { return engine_; }

private:
    static engine_type make_engine(std::uint64_t seed, std::uint64_t index)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          0x61746f6du};
        return engine_type(seq);
    }

    std::uint64_t seed_;
    std::uint64_t index_;
    engine_type engine_;
};

// Stream indices are partitioned by purpose so that, e.g., the chaos ensemble
// of a bin never shares draws with its jump ensemble.
enum class StreamPurpose : std::uint64_t {
    Trajectory = 0,
    InitialCondition = 1,
    ChaosEnsemble = 2,
    NoiseFloor = 3,
    MapWalk = 4,
};

inline std::uint64_t stream_index(StreamPurpose purpose, std::uint64_t group, std::uint64_t item)
{
    return (static_cast<std::uint64_t>(purpose) << 56) | ((group & 0xFFFFFFull) << 32) | (item & 0xFFFFFFFFull);
}

}  // namespace atomchaos
