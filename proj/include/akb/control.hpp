#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "akb/common.hpp"

namespace akb {

enum class Grip { Open, Grasp, Pinch };

enum class HandCommand : std::uint8_t {
    Grasp = 1,
    Pinch = 2,
    RotateCw = 3,
    RotateCcw = 4,
    Open = 5,
};

const char* grip_name(Grip grip);
const char* command_name(HandCommand cmd);

struct HandState {
    Grip grip = Grip::Open;
    int wrist_steps = 0;                // CW positive
    std::optional<int> last_closing;    // gesture (1 or 2) that closed the hand

    bool operator==(const HandState& other) const {
        return grip == other.grip && wrist_steps == other.wrist_steps &&
               last_closing == other.last_closing;
    }
};

// One transition of the gesture->action state machine. g1 grasps/opens,
// g2 pinches/opens, g3/g4 rotate in any state; the mismatched closing
// gesture while holding (Grasp+g2, Pinch+g1) is deliberately a no-op.
std::pair<HandState, std::optional<HandCommand>> step(const HandState& state, int gesture);

// --- wire protocol -----------------------------------------------------------

// 4-byte frame: sync 0xA5 | command id | sequence | CRC-8 over id+seq.
constexpr std::uint8_t kFrameSync = 0xA5;
constexpr std::size_t kFrameSize = 4;

// CRC-8/ATM: polynomial 0x07, init 0x00, MSB first.
std::uint8_t crc8(const std::uint8_t* data, std::size_t size);

std::array<std::uint8_t, kFrameSize> encode_frame(HandCommand cmd, std::uint8_t seq);

enum class DecodeErrorKind { BadSync, BadCrc, UnknownCommand };

struct DecodeError {
    DecodeErrorKind kind;
    std::string message;
};

struct DecodedFrame {
    HandCommand cmd;
    std::uint8_t seq;
};

// Decodes exactly one 4-byte frame.
std::variant<DecodedFrame, DecodeError> decode_frame(const std::uint8_t* bytes,
                                                     std::size_t size);

// Incremental decoder over a byte stream. Garbage before a sync byte is
// skipped (counted), bad frames are dropped (counted) and scanning
// resumes at the next 0xA5.
class FrameDecoder {
public:
    std::optional<DecodedFrame> feed(std::uint8_t byte);

    long skipped_bytes() const { return skipped_bytes_; }
    long bad_frames() const { return bad_frames_; }

private:
    std::uint8_t buffer_[kFrameSize] = {};
    std::size_t have_ = 0;
    long skipped_bytes_ = 0;
    long bad_frames_ = 0;
};

// --- transport + endpoints -----------------------------------------------------

// In-process ordered byte stream standing in for the radio link. The
// optional loss rate drops whole bytes (seeded, deterministic) for
// degraded-link experiments; delivery is never reordered.
class LoopbackTransport {
public:
    LoopbackTransport() = default;
    LoopbackTransport(double loss_rate, std::uint64_t seed);

    void send(const std::uint8_t* data, std::size_t size);
    std::optional<std::uint8_t> receive();
    std::size_t pending() const { return queue_.size(); }

private:
    std::deque<std::uint8_t> queue_;
    double loss_rate_ = 0.0;
    std::uint64_t rng_state_ = 0;
    bool lossy_ = false;
};

struct SimulatorLogEntry {
    double t = 0.0;
    HandCommand cmd;
    HandState state;  // state after applying the command
};

// Receiving endpoint: decodes frames, deduplicates recent sequence
// numbers, applies commands to a mirrored HandState and logs every
// transition as "t=<s> cmd=<name> state=<grip>/<wrist>".
class HandSimulator {
public:
    explicit HandSimulator(LoopbackTransport& transport, int dedup_window = 8);

    // Drains the transport; `now` timestamps the log entries.
    void poll(double now);

    const HandState& state() const { return state_; }
    const std::vector<SimulatorLogEntry>& log() const { return log_; }
    long malformed_frames() const;
    long duplicates_dropped() const { return duplicates_dropped_; }
    std::string log_text() const;

private:
    void apply(HandCommand cmd, double now);

    LoopbackTransport& transport_;
    FrameDecoder decoder_;
    HandState state_;
    std::vector<SimulatorLogEntry> log_;
    std::deque<int> recent_seqs_;
    std::size_t dedup_window_;
    long duplicates_dropped_ = 0;
};

// Sending endpoint: runs the state machine on confirmed gestures and
// transmits the resulting commands with a wrapping sequence number.
class HandController {
public:
    explicit HandController(LoopbackTransport& transport);

    // Returns the command sent, if the gesture produced one.
    std::optional<HandCommand> on_confirmed_gesture(int gesture);

    const HandState& state() const { return state_; }
    long commands_sent() const { return commands_sent_; }

private:
    LoopbackTransport& transport_;
    HandState state_;
    std::uint8_t next_seq_ = 0;
    long commands_sent_ = 0;
};

}  // namespace akb
