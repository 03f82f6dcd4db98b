#include "akb/control.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace akb {

const char* grip_name(Grip grip) {
    switch (grip) {
        case Grip::Open: return "Open";
        case Grip::Grasp: return "Grasp";
        case Grip::Pinch: return "Pinch";
    }
    return "?";
}

const char* command_name(HandCommand cmd) {
    switch (cmd) {
        case HandCommand::Grasp: return "GRASP";
        case HandCommand::Pinch: return "PINCH";
        case HandCommand::RotateCw: return "ROTATE_CW";
        case HandCommand::RotateCcw: return "ROTATE_CCW";
        case HandCommand::Open: return "OPEN";
    }
    return "?";
}

std::pair<HandState, std::optional<HandCommand>> step(const HandState& state, int gesture) {
    if (gesture < 1 || gesture > 4)
        throw DataError("step: gesture must be in {1,2,3,4}");

    HandState next = state;
    // Rotation works in any grip state.
    if (gesture == 3) {
        ++next.wrist_steps;
        return {next, HandCommand::RotateCw};
    }
    if (gesture == 4) {
        --next.wrist_steps;
        return {next, HandCommand::RotateCcw};
    }

    switch (state.grip) {
        case Grip::Open:
            next.grip = gesture == 1 ? Grip::Grasp : Grip::Pinch;
            next.last_closing = gesture;
            return {next, gesture == 1 ? HandCommand::Grasp : HandCommand::Pinch};
        case Grip::Grasp:
            if (gesture == 1) {  // the last-performed gesture reopens the hand
                next.grip = Grip::Open;
                next.last_closing.reset();
                return {next, HandCommand::Open};
            }
            return {next, std::nullopt};  // g2 while grasping: no edge
        case Grip::Pinch:
            if (gesture == 2) {
                next.grip = Grip::Open;
                next.last_closing.reset();
                return {next, HandCommand::Open};
            }
            return {next, std::nullopt};  // g1 while pinching: no edge
    }
    return {next, std::nullopt};
}

// --- protocol -----------------------------------------------------------------

std::uint8_t crc8(const std::uint8_t* data, std::size_t size) {
    std::uint8_t crc = 0x00;
    for (std::size_t i = 0; i < size; ++i) {
        crc ^= data[i];
        for (int bit = 0; bit < 8; ++bit)
            crc = (crc & 0x80) ? static_cast<std::uint8_t>((crc << 1) ^ 0x07)
                               : static_cast<std::uint8_t>(crc << 1);
    }
    return crc;
}

std::array<std::uint8_t, kFrameSize> encode_frame(HandCommand cmd, std::uint8_t seq) {
    const std::uint8_t id = static_cast<std::uint8_t>(cmd);
    if (id < 1 || id > 5) throw DataError("encode_frame: invalid command id");
    const std::uint8_t payload[2] = {id, seq};
    return {kFrameSync, id, seq, crc8(payload, 2)};
}

std::variant<DecodedFrame, DecodeError> decode_frame(const std::uint8_t* bytes,
                                                     std::size_t size) {
    if (size != kFrameSize)
        return DecodeError{DecodeErrorKind::BadSync, "frame must be exactly 4 bytes"};
    if (bytes[0] != kFrameSync)
        return DecodeError{DecodeErrorKind::BadSync, "missing 0xA5 sync byte"};
    const std::uint8_t payload[2] = {bytes[1], bytes[2]};
    if (crc8(payload, 2) != bytes[3])
        return DecodeError{DecodeErrorKind::BadCrc, "CRC mismatch"};
    if (bytes[1] < 1 || bytes[1] > 5)
        return DecodeError{DecodeErrorKind::UnknownCommand,
                           "unknown command id " + std::to_string(bytes[1])};
    return DecodedFrame{static_cast<HandCommand>(bytes[1]), bytes[2]};
}

std::optional<DecodedFrame> FrameDecoder::feed(std::uint8_t byte) {
    if (have_ == 0 && byte != kFrameSync) {
        ++skipped_bytes_;
        return std::nullopt;
    }
    buffer_[have_++] = byte;
    if (have_ < kFrameSize) return std::nullopt;
    have_ = 0;

    const auto result = decode_frame(buffer_, kFrameSize);
    if (std::holds_alternative<DecodedFrame>(result)) return std::get<DecodedFrame>(result);
    ++bad_frames_;
    // Resynchronize on the next 0xA5 inside the bad frame, if any.
    for (std::size_t i = 1; i < kFrameSize; ++i) {
        if (buffer_[i] == kFrameSync) {
            for (std::size_t j = i; j < kFrameSize; ++j) buffer_[have_++] = buffer_[j];
            break;
        }
    }
    return std::nullopt;
}

// --- transport -------------------------------------------------------------------

LoopbackTransport::LoopbackTransport(double loss_rate, std::uint64_t seed)
    : loss_rate_(loss_rate), rng_state_(seed ^ 0x9e3779b97f4a7c15ULL), lossy_(loss_rate > 0.0) {}

void LoopbackTransport::send(const std::uint8_t* data, std::size_t size) {
    for (std::size_t i = 0; i < size; ++i) {
        if (lossy_) {
            rng_state_ = mix_seed(rng_state_, 1);
            const double u = static_cast<double>(rng_state_ >> 11) * 0x1.0p-53;
            if (u < loss_rate_) continue;
        }
        queue_.push_back(data[i]);
    }
}

std::optional<std::uint8_t> LoopbackTransport::receive() {
    if (queue_.empty()) return std::nullopt;
    const std::uint8_t byte = queue_.front();
    queue_.pop_front();
    return byte;
}

// --- endpoints ---------------------------------------------------------------------

HandSimulator::HandSimulator(LoopbackTransport& transport, int dedup_window)
    : transport_(transport), dedup_window_(static_cast<std::size_t>(dedup_window)) {}

void HandSimulator::poll(double now) {
    while (auto byte = transport_.receive()) {
        const auto frame = decoder_.feed(*byte);
        if (!frame) continue;
        if (std::find(recent_seqs_.begin(), recent_seqs_.end(), frame->seq) !=
            recent_seqs_.end()) {
            ++duplicates_dropped_;
            continue;
        }
        recent_seqs_.push_back(frame->seq);
        if (recent_seqs_.size() > dedup_window_) recent_seqs_.pop_front();
        apply(frame->cmd, now);
    }
}

void HandSimulator::apply(HandCommand cmd, double now) {
    switch (cmd) {
        case HandCommand::Grasp:
            state_.grip = Grip::Grasp;
            state_.last_closing = 1;
            break;
        case HandCommand::Pinch:
            state_.grip = Grip::Pinch;
            state_.last_closing = 2;
            break;
        case HandCommand::RotateCw: ++state_.wrist_steps; break;
        case HandCommand::RotateCcw: --state_.wrist_steps; break;
        case HandCommand::Open:
            state_.grip = Grip::Open;
            state_.last_closing.reset();
            break;
    }
    log_.push_back({now, cmd, state_});
}

long HandSimulator::malformed_frames() const { return decoder_.bad_frames(); }

std::string HandSimulator::log_text() const {
    std::ostringstream out;
    for (const SimulatorLogEntry& entry : log_) {
        out << "t=" << entry.t << " cmd=" << command_name(entry.cmd)
            << " state=" << grip_name(entry.state.grip) << "/" << entry.state.wrist_steps
            << "\n";
    }
    return out.str();
}

HandController::HandController(LoopbackTransport& transport) : transport_(transport) {}

std::optional<HandCommand> HandController::on_confirmed_gesture(int gesture) {
    auto [next, cmd] = step(state_, gesture);
    state_ = next;
    if (!cmd) return std::nullopt;
    const auto frame = encode_frame(*cmd, next_seq_);
    next_seq_ = static_cast<std::uint8_t>(next_seq_ + 1);  // wraps at 256
    transport_.send(frame.data(), frame.size());
    ++commands_sent_;
    return cmd;
}

}  // namespace akb
