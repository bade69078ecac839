var a = document.createElement("div"); a.addEventListener("click", f);