"""Per-stage feature mismatch between the two discretizations."""
import numpy as np

import wavemesh as wm
from wavemesh import network as nw, autodiff as ad
from wavemesh.curvature import estimate_frames
from wavemesh.operators import directional_operators
from wavemesh.spectrum import solve_eigs, clamp_k
from wavemesh.wavelets import build_filterbank, KernelSpec, apply_filter

K = 128
template = wm.gen_base('bar', 6)
N = template.n_vertices
test_mesh = wm.deform(template, 'bend', 0.5)
remesh_mesh, _ = wm.remesh(test_mesh)

def spectra_for(mesh):
    frames = estimate_frames(mesh)
    ops = directional_operators(mesh, frames,
                                wm.AnisoConfig(alpha=50.0, directions=4))
    return [solve_eigs(o, clamp_k(K, mesh.n_vertices)) for o in ops]

sp_t = spectra_for(test_mesh)
sp_r = spectra_for(remesh_mesh)
lam_max = max(s.lambda_max for s in sp_t)
kern = KernelSpec.mexican_hat(lam_max, 4, tighten=False)
bank_t = build_filterbank(sp_t, kern)
bank_r = build_filterbank(sp_r, kern)

print('eigenvalue shifts: ',
      ' '.join(f'{abs(a.eigenvalues[-1]-b.eigenvalues[-1])/a.eigenvalues[-1]:.3f}'
               for a, b in zip(sp_t, sp_r)))

# l1 normalizer agreement at original vertices
for m in (0,):
    for j in range(4):
        a = bank_t.l1_normalizers[m, j]
        b = bank_r.l1_normalizers[m, j][:N]
        print(f'l1 m{m}j{j}: median rel diff '
              f'{np.median(np.abs(a-b)/a):.3f}')

# raw filter outputs on the same input field (xyz)
x = test_mesh.vertices
xr = remesh_mesh.vertices
for m in (0, 2):
    for j in range(4):
        a = apply_filter(bank_t, m, j, x)
        b = apply_filter(bank_r, m, j, xr)[:N]
        num = np.linalg.norm(a - b, axis=1)
        den = np.linalg.norm(a, axis=1) + 1e-12
        print(f'filter m{m}j{j}: median rel out diff {np.median(num/den):.3f}')

# full network stages, untrained
cfg = nw.ModelConfig(n_classes=N, encoder_dims=(64, 64), conv_layers=3,
                     directions=4, scales=4, perturb=True, seed=0)
model = nw.Model.initialize(cfg, N)

def stages(coords, bank):
    params_t = {k: ad.Tensor(v) for k, v in model.params.items()}
    xs = []
    x = ad.constant(np.asarray(coords))
    for i in range(2):
        x = ad.selu(ad.affine(x, params_t[f'enc{i}.w'], params_t[f'enc{i}.b']))
    xs.append(x.value)
    for layer in range(3):
        thetas = [[params_t[f'conv{layer}.theta{m}_{j}'] for j in range(4)]
                  for m in range(4)]
        z = ad.wavelet_mix(x, thetas, bank)
        xs.append(z.value)
        x = ad.standardize(ad.selu(z), params_t[f'conv{layer}.gamma'],
                           params_t[f'conv{layer}.beta'])
        xs.append(x.value)
    return xs

st_t = stages(x, bank_t)
st_r = stages(xr, bank_r)
labels = ['encoder', 'conv1 pre', 'conv1 post', 'conv2 pre', 'conv2 post',
          'conv3 pre', 'conv3 post']
for name, a, b in zip(labels, st_t, st_r):
    b = b[:N]
    num = np.linalg.norm(a - b, axis=1)
    den = np.linalg.norm(a, axis=1) + 1e-12
    # also: relative to typical neighbor distance in descriptor space
    rng = np.random.default_rng(0)
    idx = rng.integers(0, N, 500)
    spread = np.median(np.linalg.norm(a[idx][:, None, :] -
                                      a[rng.integers(0, N, 20)][None], axis=2))
    print(f'{name}: median rel diff {np.median(num/den):.3f}  '
          f'median abs {np.median(num):.3f}  desc spread {spread:.2f}')
