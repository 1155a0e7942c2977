#pragma once

#include <memory>
#include <optional>

#include "tightkit/forms.hpp"
#include "tightkit/report.hpp"
#include "tightkit/surface.hpp"

namespace tightkit::detail {

// The configured form source; surface is set for the closed-surface families.
struct SourceBundle {
    std::shared_ptr<const FormSource> forms;
    std::optional<Surface> surface;
    std::shared_ptr<const PrescribedForms> prescribed;
};

SourceBundle make_source(const SurfaceSpec& spec);

}  // namespace tightkit::detail
