"""Diagnose vanilla divergence and remesh degradation."""
import sys
import time

import numpy as np

import wavemesh as wm
from wavemesh import network as nw
from wavemesh import corresp
from wavemesh.curvature import estimate_frames
from wavemesh.operators import directional_operators
from wavemesh.spectrum import solve_eigs, clamp_k
from wavemesh.wavelets import build_filterbank, KernelSpec

K, FEAT, LAYERS, RES = 128, 64, 3, 6

template = wm.gen_base('bar', RES)
N = template.n_vertices
deforms = [('bend', 0.9), ('bend', -0.9), ('twist', 0.35), ('twist', -0.35)]
held = ('bend', 0.5)
train_meshes = [wm.deform(template, m, g) for m, g in deforms]
test_mesh = wm.deform(template, *held)
remesh_mesh, _ = wm.remesh(test_mesh)

SPECTRA = {}
def spectra_for(mesh, key, directions=4, alpha=50.0):
    if key not in SPECTRA:
        frames = estimate_frames(mesh)
        ops = directional_operators(mesh, frames,
                                    wm.AnisoConfig(alpha=alpha, directions=directions))
        SPECTRA[key] = [solve_eigs(o, clamp_k(K, mesh.n_vertices)) for o in ops]
    return SPECTRA[key]

names = ['template'] + [f'train{i}' for i in range(4)] + ['test', 'remesh']
meshes = dict(zip(names, [template] + train_meshes + [test_mesh, remesh_mesh]))
t0 = time.time()
all_spectra = {k: spectra_for(m, k) for k, m in meshes.items()}
print(f'spectra {time.time()-t0:.0f}s')

# shared kernel from the training meshes' lambda_max
lam_max = max(s.lambda_max for k in ['train0','train1','train2','train3']
              for s in all_spectra[k])
kern = KernelSpec.mexican_hat(lam_max, 4, tighten=False)
t0 = time.time()
BANKS = {k: build_filterbank(v, kern) for k, v in all_spectra.items()}
print(f'banks {time.time()-t0:.0f}s; shared lambda_max {lam_max:.2f}')
for k in names:
    lm = max(s.lambda_max for s in all_spectra[k])
    print(f'  {k}: own lambda_max {lm:.2f}')

gt = np.arange(N)
rows_test = corresp.geodesic_rows(test_mesh, np.arange(N))
ra_test = np.sqrt(test_mesh.total_area)
rows_rm = corresp.geodesic_rows(remesh_mesh, np.arange(N))
ra_rm = np.sqrt(remesh_mesh.total_area)

def ages_now(model):
    dt_tpl = nw.descriptors(model, template.vertices, BANKS['template'])
    d_test = nw.descriptors(model, test_mesh.vertices, BANKS['test'])
    d_rm = nw.descriptors(model, remesh_mesh.vertices, BANKS['remesh'])
    c1 = corresp.match_nn(dt_tpl, d_test)
    c2 = corresp.match_nn(dt_tpl, d_rm)
    a1 = float((rows_test[gt, c1] / ra_test).mean() * 100)
    a2 = float((rows_rm[gt, c2] / ra_rm).mean() * 100)
    return a1, a2

def run(perturb, seed, epochs, lr):
    items = [nw.TrainItem(coords=m.vertices, labels=gt, bank=BANKS[f'train{i}'],
                          name=f'train{i}') for i, m in enumerate(train_meshes)]
    cfg = nw.ModelConfig(n_classes=N, encoder_dims=(64, FEAT), conv_layers=LAYERS,
                         directions=4, scales=4, perturb=perturb, seed=seed)
    model = nw.Model.initialize(cfg, N)
    curve = [ages_now(model)]
    nw.train(model, items, epochs=epochs, lr=lr,
             on_epoch=lambda m, e: curve.append(ages_now(m)))
    return curve

lr = float(sys.argv[1]) if len(sys.argv) > 1 else 1e-3
epochs = int(sys.argv[2]) if len(sys.argv) > 2 else 40
for perturb in (True, False):
    t0 = time.time()
    curve = run(perturb, 0, epochs, lr)
    label = 'perturbed' if perturb else 'vanilla'
    print(f'{label} lr={lr} ({time.time()-t0:.0f}s):')
    print('  orig  :', ' '.join(f'{a[0]:.1f}' for a in curve))
    print('  remesh:', ' '.join(f'{a[1]:.1f}' for a in curve))
