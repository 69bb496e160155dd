#include "ersim/presets.hpp"

#include <string>

#include "ersim/errors.hpp"

namespace ersim::presets {

namespace {

constexpr Preset kPresets[] = {
    {"fig1c_g2", "single emitter behind a background floor, g2(0) near 0.35",
     R"(experiment = g2
seed = 1001

[excitation]
cross_section = 5e-17 cm2
photon_flux = 2e19 /cm2/s
pulse_width = 1 ms

[stream]
n_emitters = 1
n_pulses = 200000
period = 12 ms
lifetime = 1.2 ms
target_g2 = 0.35
max_k = 20

[detector]
efficiency = 0.3
channels = 2
)"},
    {"fig2b_saturation", "emission rate versus photon flux and the half-saturation flux",
     R"(experiment = saturation
seed = 2002

[excitation]
cross_section = 5e-17 cm2
wavelength = 1534 nm

[saturation]
tau_effective = 1.2 ms
flux_min = 1e17 /cm2/s
flux_max = 1e21 /cm2/s
points = 41
rate_max = 20 kcps
noise = 0
)"},
    {"fig3_blueprint", "4 x 3 pillar array, 1 um spot, dose to ions per pillar",
     R"(experiment = blueprint

[geometry]
pitch = 250 nm
rows = 3
cols = 4
hnp_inner_radius = 25 nm
critical_dimension = 4.8 nm
hnp_height = 100 nm

[spot]
diameter = 1 um
wavelength = 1534 nm

[occupancy]
dose = 1e12 /cm2
retention = 1
activation = 1
k_max = 20
)"},
    {"fig3c_g2_sites", "six emitters under one spot, background free",
     R"(experiment = g2
seed = 3003

[excitation]
cross_section = 5e-17 cm2
photon_flux = 2e19 /cm2/s
pulse_width = 1 ms

[stream]
n_emitters = 6
n_pulses = 200000
period = 12 ms
lifetime = 1.2 ms
max_k = 20

[detector]
efficiency = 0.3
channels = 2
)"},
    {"fig4b_g2", "single emitter with background, g2(0) near 0.25",
     R"(experiment = g2
seed = 4004

[excitation]
cross_section = 5e-17 cm2
photon_flux = 2e19 /cm2/s
pulse_width = 1 ms

[stream]
n_emitters = 1
n_pulses = 200000
period = 12 ms
lifetime = 1.2 ms
target_g2 = 0.25
max_k = 20

[detector]
efficiency = 0.3
channels = 2
)"},
    {"fig4c_rabi", "Bloch-mode Rabi oscillation at 96% contrast",
     R"(experiment = rabi
seed = 4005

[coherence]
rabi_frequency = 2pi*660 kHz

[rabi]
mode = bloch
width_max = 5 us
points = 200
contrast = 0.96
offset = 0.02
noise = 0
)"},
    {"fig4d_ramsey", "Ramsey decay with T2* = 32 us, 320 us pi/2 pulses",
     R"(experiment = ramsey
seed = 4006

[coherence]
rabi_frequency = 4908.738521234052 rad/s
t2_star = 32 us

[ramsey]
mode = analytic
pi_half_width = 320 us
tau_max = 128 us
points = 41
noise = 2%
)"},
    {"fig4e_echo", "Hahn echo decay with T2 = 568 us",
     R"(experiment = echo
seed = 4007

[coherence]
rabi_frequency = 4908.738521234052 rad/s
t2 = 568 us

[echo]
mode = analytic
pi_width = 640 us
tau_max = 2.5 ms
points = 41
noise = 2%
)"},
    {"fig5_upconversion", "multi-pulse ladder yields and pumped population dynamics",
     R"(experiment = upconversion

[levels]
preset = nominal

[excitation]
cross_section = 5e-17 cm2
photon_flux = 2e19 /cm2/s
pulse_width = 1 ms

[upconversion]
pulses = 10
duration = 20 ms
)"},
    {"fig5c_ple", "upconversion PLE line, 37 MHz laser kernel",
     R"(experiment = ple
seed = 5005

[ple]
coherence_time = 32 us
laser_fwhm = 37 MHz
kernel = gaussian
points = 401
noise = 0
)"},
};

}  // namespace

std::span<const Preset> all() { return kPresets; }

const Preset* find(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return &p;
  return nullptr;
}

config::Config load(std::string_view name) {
  const auto* p = find(name);
  if (!p) throw ValidationError({"preset: unknown preset '" + std::string(name) + "'"});
  return config::parse(p->text);
}

}  // namespace ersim::presets
